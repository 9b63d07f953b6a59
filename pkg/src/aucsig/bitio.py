"""Minimal LSB-first bit packing used by the signal codecs."""

from .errors import MalformedSignal


class BitWriter:
    """Accumulates fields of explicit width, least significant bit first."""

    def __init__(self):
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits < 0:
            raise ValueError("negative field width")
        if value < 0 or (nbits < 64 and value >> nbits):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc |= value << self._nbits
        self._nbits += nbits

    @property
    def bit_length(self) -> int:
        return self._nbits

    def to_bytes(self) -> bytes:
        nbytes = (self._nbits + 7) // 8
        return self._acc.to_bytes(nbytes, "little")


class BitReader:
    """Reads back fields written by BitWriter."""

    def __init__(self, data: bytes, bit_length: int | None = None):
        self._acc = int.from_bytes(data, "little")
        self._nbits = 8 * len(data) if bit_length is None else bit_length
        if self._nbits > 8 * len(data):
            raise MalformedSignal("declared bit length exceeds buffer")
        self._pos = 0

    def read(self, nbits: int) -> int:
        if self._pos + nbits > self._nbits:
            raise MalformedSignal("bitstring truncated")
        out = (self._acc >> self._pos) & ((1 << nbits) - 1)
        self._pos += nbits
        return out

    @property
    def remaining(self) -> int:
        return self._nbits - self._pos
