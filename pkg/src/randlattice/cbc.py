"""Component-by-component construction of a single generating vector.

Greedy: coordinate ``s`` is the candidate in ``1..p-1`` minimising the
squared worst-case error ``P_{2alpha, gamma^2}`` of the prefix, ties to the
smallest candidate. Naive O(p^2 d) with vectorised candidate loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .korobov import SpaceParams
from .lattice import is_prime
from .merit import kernel_table

_CAND_CHUNK = 256
_TIE_RTOL = 1e-12
_TIE_ATOL = 1e-15


@dataclass(frozen=True)
class CbcResult:
    p: int
    z: tuple[int, ...]
    merit_per_dim: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"p": self.p, "z": list(self.z), "merit_per_dim": list(self.merit_per_dim)}


def cbc_construct(p: int, d: int, space: SpaceParams) -> CbcResult:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if space.d < d:
        raise ValueError("space has fewer dimensions than requested")
    beta = 2 * space.alpha
    if not (float(beta).is_integer() and int(beta) in (2, 4, 6)):
        raise ValueError("cbc needs alpha in {1, 2, 3}")
    table = kernel_table(int(beta), p, "bernoulli")
    g2 = space.gammas**2
    k = np.arange(p, dtype=np.int64)
    prod = np.ones(p)
    z, merits = [], []
    for s in range(d):
        vals = np.empty(p - 1)
        for c0 in range(1, p, _CAND_CHUNK):
            cands = np.arange(c0, min(c0 + _CAND_CHUNK, p), dtype=np.int64)
            idx = (k[:, None] * cands[None, :]) % p
            vals[c0 - 1 : c0 - 1 + len(cands)] = (prod[:, None] * (1.0 + g2[s] * table[idx])).mean(axis=0) - 1.0
        lo = vals.min()
        # rounding noise must not break exact ties; smallest candidate wins
        best = int(np.flatnonzero(vals <= lo + _TIE_RTOL * abs(lo) + _TIE_ATOL)[0])
        best_c, best_val = best + 1, float(vals[best])
        prod = prod * (1.0 + g2[s] * table[(k * best_c) % p])
        z.append(best_c)
        merits.append(best_val)
    return CbcResult(p, tuple(z), tuple(merits))
