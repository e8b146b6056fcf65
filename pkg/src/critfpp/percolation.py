"""Critical Bernoulli(1/2) site configurations on region masks.

Bit 1 is yellow (passage cost 1), bit 0 is blue (cost 0).  Bits are stored in
the canonical site order of the mask, lexicographic in ``(b, a)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .lattice import DI, DL, DO, DR, IN, RegionMask
from .rng import RngStream, random_bits

YELLOW, BLUE, OPEN = "yellow", "blue", "open"
# effective colour codes used by the kernels
EFF_OPEN, EFF_BLUE, EFF_YELLOW = -1, 0, 1
_EFF = {YELLOW: EFF_YELLOW, BLUE: EFF_BLUE, OPEN: EFF_OPEN}
_CLASS_KEY = {"l": DL, "r": DR, "i": DI, "o": DO}

MAX_ENUMERATION_SITES = 30


@dataclass(frozen=True, eq=False)
class Configuration:
    mask: RegionMask
    bits: np.ndarray  # uint8 0/1, canonical order

    def __post_init__(self):
        if self.bits.shape != (self.mask.n_sites,):
            raise ValueError(f"expected {self.mask.n_sites} bits, got {self.bits.shape}")

    @property
    def mask_id(self) -> str:
        return self.mask.spec.mask_id

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.mask == other.mask and np.array_equal(self.bits, other.bits)

    __hash__ = object.__hash__

    def key(self) -> bytes:
        return np.packbits(self.bits, bitorder="little").tobytes()

    def bit(self, s: Sequence[int]) -> int:
        k = self.mask.index_of(s)
        if k < 0:
            raise KeyError(f"{tuple(s)} is not a site of the mask")
        return int(self.bits[k])

    def color_grid(self) -> np.ndarray:
        """Flat int8 grid: bits on sites, 0 elsewhere."""
        g = np.zeros(self.mask.flat_codes.size, dtype=np.int8)
        g[self.mask.site_flat] = self.bits
        return g

    def to_text(self) -> str:
        return f"config {self.mask_id} {self.key().hex()}"

    @staticmethod
    def from_text(line: str, mask: RegionMask) -> "Configuration":
        tok = line.split()
        if len(tok) != 3 or tok[0] != "config":
            raise ValueError(f"bad config line {line!r}")
        if tok[1] != mask.spec.mask_id:
            raise ValueError(f"config is for {tok[1]}, not {mask.spec.mask_id}")
        raw = np.frombuffer(bytes.fromhex(tok[2]), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[:mask.n_sites].copy()
        return Configuration(mask, bits)

    @staticmethod
    def constant(mask: RegionMask, bit: int) -> "Configuration":
        return Configuration(mask, np.full(mask.n_sites, bit, dtype=np.uint8))

    @staticmethod
    def from_sites(mask: RegionMask, yellow: Sequence[Sequence[int]]) -> "Configuration":
        """All blue except the listed yellow sites."""
        bits = np.zeros(mask.n_sites, dtype=np.uint8)
        for s in yellow:
            k = mask.index_of(s)
            if k < 0:
                raise KeyError(f"{tuple(s)} is not a site of the mask")
            bits[k] = 1
        return Configuration(mask, bits)

    @staticmethod
    def from_grid(mask: RegionMask, grid: np.ndarray, grid_origin: tuple[int, int]) -> "Configuration":
        """Restrict a larger 2-d bit field (indexed [b - b0, a - a0]) to ``mask``."""
        c = mask.coords(mask.site_flat)
        bits = grid[c[:, 1] - grid_origin[1], c[:, 0] - grid_origin[0]]
        return Configuration(mask, np.ascontiguousarray(bits, dtype=np.uint8))


def sample_config(mask: RegionMask, stream: RngStream) -> Configuration:
    return Configuration(mask, random_bits(stream.generator(), mask.n_sites))


class ConfigEnumeration:
    """All ``2**n`` configurations of a small mask in canonical binary order.

    Configuration number ``c`` has bit ``k`` (canonical site ``k``) equal to bit
    ``k`` of the integer ``c``.
    """

    def __init__(self, mask: RegionMask):
        if mask.n_sites > MAX_ENUMERATION_SITES:
            raise ValueError(f"enumeration refused: {mask.n_sites} sites exceeds the limit of {MAX_ENUMERATION_SITES}")
        self.mask = mask
        self.n = mask.n_sites

    def __len__(self) -> int:
        return 1 << self.n

    def __getitem__(self, c: int) -> Configuration:
        if not 0 <= c < len(self):
            raise IndexError(c)
        return Configuration(self.mask, config_bits(c, self.n))

    def __iter__(self) -> Iterator[Configuration]:
        for c in range(len(self)):
            yield Configuration(self.mask, config_bits(c, self.n))


def config_bits(c: int, n: int) -> np.ndarray:
    return ((int(c) >> np.arange(n, dtype=np.uint64)) & 1).astype(np.uint8)


def config_index(config: Configuration) -> int:
    return int(sum(int(b) << k for k, b in enumerate(config.bits)))


def enumerate_configs(mask: RegionMask) -> ConfigEnumeration:
    return ConfigEnumeration(mask)


@dataclass(frozen=True)
class BoundaryColoring:
    """Colour per boundary class key ``l``, ``r``, ``i``, ``o``; unlisted classes are open."""

    colors: Mapping[str, str]

    def __post_init__(self):
        for k, v in self.colors.items():
            if k not in _CLASS_KEY or v not in _EFF:
                raise ValueError(f"bad boundary colouring entry {k}: {v}")

    def color_of_code(self, code: int) -> str:
        for k, c in _CLASS_KEY.items():
            if c == code:
                return self.colors.get(k, OPEN)
        raise KeyError(code)


OUTER_BLUE = BoundaryColoring({"o": BLUE})


class EffectiveColoring:
    """Total colour lookup on ``sites`` and the boundary of a mask."""

    def __init__(self, coloring: BoundaryColoring, config: Configuration):
        mask = config.mask
        for k in coloring.colors:
            if not np.any(mask.flat_codes == _CLASS_KEY[k]):
                raise ValueError(f"boundary class {k!r} is not present in the mask")
        self.mask = mask
        self.coloring = coloring
        eff = np.full(mask.flat_codes.size, EFF_OPEN, dtype=np.int8)
        eff[mask.site_flat] = config.bits.astype(np.int8)
        for k, code in _CLASS_KEY.items():
            eff[mask.flat_codes == code] = _EFF[coloring.colors.get(k, OPEN)]
        self.eff = eff

    def __call__(self, s: Sequence[int]) -> str:
        f = self.mask.flat(s)
        if f < 0 or self.mask.flat_codes[f] == 0:
            raise KeyError(f"{tuple(s)} is outside the mask and its boundary")
        return {EFF_YELLOW: YELLOW, EFF_BLUE: BLUE, EFF_OPEN: OPEN}[int(self.eff[f])]


def apply_boundary(coloring: BoundaryColoring, config: Configuration) -> EffectiveColoring:
    return EffectiveColoring(coloring, config)


__all__ = [
    "BLUE", "OPEN", "YELLOW", "BoundaryColoring", "ConfigEnumeration", "Configuration", "EffectiveColoring",
    "OUTER_BLUE", "apply_boundary", "config_bits", "config_index", "enumerate_configs", "sample_config", "IN",
]
