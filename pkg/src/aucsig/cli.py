"""Command-line front door: evaluate, solve, generate, oracle, benchmark.

Every run is reproducible from (argv, input files): randomized subcommands
take a --seed (falling back to the SIG_SEED environment variable, then 0)
and outputs carry their resolved configuration in '#' header lines.
Exit codes: 0 success, 2 validation errors, 3 size-guard errors.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import bench, bipartite, core, gen, jl, mw, oracle
from . import revenue as revenue_mod
from .errors import SignalingError, SizeGuardError


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _header(cmd: str, config: dict) -> str:
    lines = [f"# aucsig {cmd}"]
    for key in sorted(config):
        lines.append(f"# {key}={_fmt(config[key])}")
    return "\n".join(lines) + "\n"


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SIG_SEED")
    return int(env) if env else 0


def _cmd_eval(args) -> int:
    inst = core.load_instance(args.instance)
    scheme = core.load_scheme(inst, args.scheme)
    report = core.auction_report(inst, scheme)
    cfg = {"instance": args.instance, "scheme": args.scheme}
    _write(args.out, _header("eval", cfg) + report.to_csv())
    return 0


def _cmd_solve_welfare(args) -> int:
    seed = _default_seed(args)
    inst = core.load_instance(args.instance)
    scheme = bipartite.solve_welfare(inst, solver=args.solver, samples=args.samples,
                                     steps=args.steps, seed=seed)
    w = core.welfare(inst, scheme)
    try:
        opt = oracle.opt_welfare(inst, budget=args.oracle_budget).value
        opt_s, ratio_s = _fmt(opt), _fmt(w / opt if opt else 1.0)
    except SizeGuardError:
        opt_s, ratio_s = "", ""
    cfg = {"instance": args.instance, "solver": args.solver, "seed": seed,
           "samples": args.samples, "steps": args.steps}
    body = "welfare,opt_bound,ratio\n" + f"{_fmt(w)},{opt_s},{ratio_s}\n"
    _write(args.out, _header("solve-welfare", cfg) + body)
    if args.scheme_out:
        core.dump_scheme(inst, scheme, args.scheme_out)
    return 0


def _cmd_solve_revenue(args) -> int:
    seed = _default_seed(args)
    inst = core.load_instance(args.instance)
    plan = revenue_mod.solve_revenue(inst, optimized_mix=args.optimized_mix,
                                     solver=args.solver, seed=seed)
    try:
        opt = oracle.opt_revenue_det(inst, budget=args.oracle_budget).value
        ratio_s = _fmt(plan.revenue / opt) if opt > 0 else "1"
    except SizeGuardError:
        ratio_s = ""
    d = plan.diagnostics
    cfg = {"instance": args.instance, "optimized_mix": args.optimized_mix,
           "solver": args.solver, "seed": seed}
    body = "vstar,istar,alpha,welfare_h,rev_g,rev_x,chosen,ratio_vs_oracle\n"
    body += ",".join([
        _fmt(d.get("v_star", "")), _fmt(d.get("i_star", "")), _fmt(d.get("alpha", "")),
        _fmt(d.get("welfare_h", "")), _fmt(plan.rev_g),
        _fmt(plan.rev_x) if plan.rev_x is not None else "",
        plan.chosen, ratio_s,
    ]) + "\n"
    _write(args.out, _header("solve-revenue", cfg) + body)
    if args.scheme_out:
        core.dump_scheme(inst, plan.scheme, args.scheme_out)
    return 0


def _cmd_mw(args) -> int:
    seed = _default_seed(args)
    cfg = {"mode": args.mode, "d": args.d, "n": args.n, "epsilon": args.epsilon,
           "delta": args.delta, "trials": args.trials, "seed": seed}
    rows = []
    signals = []
    if args.mode == "known":
        for trial in range(args.trials):
            sample = gen.random_geometric(args.d, args.n, seed=seed + trial, nonneg=True)
            rep = mw.mw_guarantee_check_known(sample.omega[None, :], sample.valuations,
                                              args.epsilon)
            r = rep.rows[0]
            rows.append((trial, 0, r.T, r.bits, r.welfare, r.opt, r.gap))
            sig = mw.mw_signal_known(sample.omega, sample.valuations, args.epsilon)
            signals.append((trial, mw.mw_bit_length(sig), mw.encode_mw(sig).hex()))
    else:
        dim = args.d

        def sampler(rng, size):
            return rng.uniform(-1.0, 1.0, size=(size, dim))

        for trial in range(args.trials):
            rng0 = np.random.default_rng(seed + trial)
            omega = np.zeros(dim)
            support = rng0.choice(dim, size=min(4, dim), replace=False)
            omega[support] = rng0.dirichlet(np.ones(len(support)))
            rep = mw.mw_guarantee_check_bayes(omega, sampler, args.epsilon, args.delta,
                                              args.n, trials=args.eval_draws,
                                              seed=seed + trial)
            r = rep.rows[0]
            rows.append((trial, 0, r.T, r.bits, rep.mean_welfare, rep.mean_opt,
                         rep.mean_opt - rep.mean_welfare))
    body = "trial,omega_id,T,bits,welfare,opt,gap\n"
    for row in rows:
        body += ",".join(_fmt(x) for x in row) + "\n"
    _write(args.out, _header("mw", cfg) + body)
    if args.signals_out and signals:
        text = _header("mw-signals", cfg) + "trial,bits,hex\n"
        for trial, bits, hexs in signals:
            text += f"{trial},{bits},{hexs}\n"
        _write(args.signals_out, text)
    return 0


def _cmd_jl(args) -> int:
    seed = _default_seed(args)
    sample = gen.random_geometric(args.d, 1, seed=seed, mode="subspace", k=args.k)
    val = jl.SubspaceValuation(sample.bases[0])
    sig = jl.jl_signal(sample.omega, args.k, args.epsilon, args.n, seed,
                       t_scale=args.t_scale)
    est = jl.estimate_value_from_signal(sig, val)
    true = jl.subspace_value(sample.omega, val)
    data = jl.encode_jl(sig)
    if args.signal_out:
        with open(args.signal_out, "wb") as fh:
            fh.write(data)
    cfg = {"d": args.d, "k": args.k, "epsilon": args.epsilon, "n": args.n,
           "seed": seed, "t_scale": args.t_scale}
    body = "T,eta_bits,bytes,estimate,true,error\n"
    body += ",".join(_fmt(x) for x in

                     (sig.T, sig.bit_length, len(data), est, true, abs(est - true))) + "\n"
    _write(args.out, _header("jl", cfg) + body)
    return 0


def _cmd_oracle(args) -> int:
    inst = core.load_instance(args.instance)
    if args.objective == "welfare":
        res = oracle.opt_welfare(inst, budget=args.budget)
    else:
        res = oracle.opt_revenue_det(inst, budget=args.budget)
    report = core.auction_report(inst, res.scheme)
    cfg = {"instance": args.instance, "objective": args.objective, "budget": args.budget}
    text = _header("oracle", cfg) + report.to_csv()
    text += f"# objective={res.objective} value={_fmt(res.value)} enumerated={res.enumerated}\n"
    _write(args.out, text)
    return 0


def _cmd_gen(args) -> int:
    seed = _default_seed(args)
    if args.kind == "maxcover":
        if not args.spec:
            raise SignalingError("gen --kind maxcover needs --spec FILE")
        with open(args.spec) as fh:
            spec = gen.parse_max_cover(fh.read())
        inst = gen.from_max_cover(spec)
        meta = {"kind": "maxcover", "spec": os.path.basename(args.spec)}
    elif args.kind == "random":
        inst = gen.random_instance(args.m, args.n, args.signals, args.k, seed,
                                   value_dist=args.value_dist,
                                   edge_density=args.edge_density)
        meta = {"kind": "random", "prng": gen.PRNG_NAME, "seed": seed}
    else:  # geo
        sample = gen.random_geometric(args.d, args.n, seed, mode=args.mode,
                                      k=args.geo_k, nonneg=args.nonneg)
        doc = {"kind": args.mode, "prng": gen.PRNG_NAME, "seed": seed,
               "omega": sample.omega.tolist()}
        if args.mode == "inner_product":
            doc["valuations"] = sample.valuations.tolist()
        else:
            doc["bases"] = [b.tolist() for b in sample.bases]
        import json

        _write(args.out, json.dumps(doc, indent=1) + "\n")
        return 0
    if args.out is None or args.out == "-":
        import json

        sys.stdout.write(json.dumps(core.instance_to_dict(inst, meta), indent=1) + "\n")
    else:
        core.dump_instance(inst, args.out, meta)
    return 0


def _cmd_bench(args) -> int:
    seed = _default_seed(args)
    rows = bench.run_suite(args.suite, seed, measure_time=args.timings)
    cfg = {"suite": args.suite, "seed": seed, "timings": args.timings}
    body = bench.CSV_HEADER + "\n" + "".join(r.to_csv() + "\n" for r in rows)
    _write(args.out, _header("bench", cfg) + body)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aucsig", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, seed=True):
        sp.add_argument("--out", default=None, help="output path ('-' = stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("eval", help="evaluate a scheme on an instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--scheme", required=True)
    add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("solve-welfare", help="approximate welfare maximization")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--solver", choices=["greedy", "cg"], default="greedy")
    sp.add_argument("--samples", type=int, default=64)
    sp.add_argument("--steps", type=int, default=32)
    sp.add_argument("--oracle-budget", type=int, default=oracle.DEFAULT_BUDGET)
    sp.add_argument("--scheme-out", default=None)
    add_common(sp)
    sp.set_defaults(func=_cmd_solve_welfare)

    sp = sub.add_parser("solve-revenue", help="constant-factor revenue maximization")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--optimized-mix", action="store_true")
    sp.add_argument("--solver", choices=["greedy", "cg"], default="greedy")
    sp.add_argument("--oracle-budget", type=int, default=oracle.DEFAULT_BUDGET)
    sp.add_argument("--scheme-out", default=None)
    add_common(sp)
    sp.set_defaults(func=_cmd_solve_revenue)

    sp = sub.add_parser("mw", help="multiplicative-weights signaling trials")
    sp.add_argument("--mode", choices=["known", "bayes"], default="known")
    sp.add_argument("--d", type=int, default=64)
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--epsilon", type=float, default=0.2)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--eval-draws", type=int, default=400)
    sp.add_argument("--signals-out", default=None)
    add_common(sp)
    sp.set_defaults(func=_cmd_mw)

    sp = sub.add_parser("jl", help="Johnson-Lindenstrauss signaling")
    sp.add_argument("--d", type=int, default=256)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=0.3)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--t-scale", type=float, default=1e-5)
    sp.add_argument("--signal-out", default=None)
    add_common(sp)
    sp.set_defaults(func=_cmd_jl)

    sp = sub.add_parser("oracle", help="exact brute-force optimum")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--objective", choices=["welfare", "revenue"], default="welfare")
    sp.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_oracle)

    sp = sub.add_parser("gen", help="generate instances")
    sp.add_argument("--kind", choices=["maxcover", "random", "geo"], required=True)
    sp.add_argument("--spec", default=None, help="max-cover line-format file")
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--signals", type=int, default=4)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--value-dist", choices=["uniform01", "bernoulli"], default="uniform01")
    sp.add_argument("--edge-density", type=float, default=None)
    sp.add_argument("--d", type=int, default=64)
    sp.add_argument("--mode", choices=["inner_product", "subspace"], default="inner_product")
    sp.add_argument("--geo-k", type=int, default=2)
    sp.add_argument("--nonneg", action="store_true")
    add_common(sp)
    sp.set_defaults(func=_cmd_gen)

    sp = sub.add_parser("bench", help="benchmark suites")
    sp.add_argument("--suite", choices=list(bench.SUITES), required=True)
    sp.add_argument("--timings", action="store_true",
                    help="record wall-clock times (breaks byte-identical reruns)")
    add_common(sp)
    sp.set_defaults(func=_cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SignalingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
