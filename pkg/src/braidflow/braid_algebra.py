"""Braid words and their closure invariants.

Words live in the Artin generators: letter +k means the strand in position k
passes over position k+1 with a counterclockwise half twist, -k the inverse.
The closure invariants implemented here are the writhe homomorphism, the
Seifert form of the closed-braid surface, its exact integer signature, the
homogenization along powers, and the writhe-corrected signature combination
that vanishes on full twists.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class CalibrationError(RuntimeError):
    """Signature sequence of the full twist failed to stabilize."""


class UncalibratedRatioError(ValueError):
    """s-combination evaluated without a ratio for this strand count."""


@dataclass(frozen=True)
class BraidWord:
    letters: tuple[int, ...] = ()
    n_strands: int = 2

    def __post_init__(self):
        if self.n_strands < 1:
            raise ValueError("need at least one strand")
        for l in self.letters:
            if l == 0 or abs(l) >= self.n_strands:
                raise ValueError(f"letter {l} invalid on {self.n_strands} strands")

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        if self.n_strands != other.n_strands:
            raise ValueError("strand counts differ")
        return BraidWord(self.letters + other.letters, self.n_strands)

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple(-l for l in reversed(self.letters)), self.n_strands)

    def power(self, k: int) -> "BraidWord":
        base = self if k >= 0 else self.inverse()
        return BraidWord(base.letters * abs(k), self.n_strands)

    def mirror(self) -> "BraidWord":
        return BraidWord(tuple(-l for l in self.letters), self.n_strands)

    def reduced(self) -> "BraidWord":
        return free_reduce(self)

    def to_text(self) -> str:
        return " ".join(str(l) for l in self.letters)

    @staticmethod
    def from_text(text: str, n_strands: int | None = None) -> "BraidWord":
        letters = tuple(int(tok) for tok in text.split())
        if n_strands is None:
            n_strands = max((abs(l) for l in letters), default=1) + 1
        return BraidWord(letters, n_strands)


def free_reduce(word: BraidWord) -> BraidWord:
    stack: list[int] = []
    for l in word.letters:
        if stack and stack[-1] == -l:
            stack.pop()
        else:
            stack.append(l)
    return BraidWord(tuple(stack), word.n_strands)


def writhe(word: BraidWord) -> int:
    """Exponent sum; the homomorphism taking value 1 on every generator."""
    return sum(1 if l > 0 else -1 for l in word.letters)


def permutation(word: BraidWord) -> tuple[int, ...]:
    """perm[i] = final position of the strand starting at position i (0-based)."""
    pos = list(range(word.n_strands))
    for l in word.letters:
        k = abs(l) - 1
        # strands currently at positions k, k+1 trade places
        a = pos.index(k)
        b = pos.index(k + 1)
        pos[a], pos[b] = pos[b], pos[a]
    return tuple(pos)


def is_pure(word: BraidWord) -> bool:
    return permutation(word) == tuple(range(word.n_strands))


def full_twist(n: int) -> BraidWord:
    """(s_1 s_2 ... s_{n-1})^n, the central full twist on n strands."""
    if n < 2:
        raise ValueError("full twist needs n >= 2")
    return BraidWord(tuple(range(1, n)) * n, n)


def random_word(rng: np.random.Generator, n_strands: int, length: int) -> BraidWord:
    idx = rng.integers(1, n_strands, size=length)
    sgn = rng.choice([-1, 1], size=length)
    return BraidWord(tuple(int(i * s) for i, s in zip(idx, sgn)), n_strands)


def seifert_matrix(word: BraidWord) -> np.ndarray:
    """Integer Seifert matrix of the word's closure, after free reduction.

    The surface is the braid-closure one: a disc per strand, a half-twisted
    band per letter.  Basis loops run between consecutive bands in the same
    generator column; for a connected closure there are letters - strands + 1
    of them.  Entries follow the convention that makes the closure of s_1^2
    the Hopf link with Seifert matrix (-1).
    """
    word = free_reduce(word)
    cols: dict[int, list[tuple[int, int]]] = {}
    for pos, l in enumerate(word.letters):
        cols.setdefault(abs(l), []).append((pos, 1 if l > 0 else -1))
    loops: list[tuple[int, int, int, int, int]] = []
    for col in sorted(cols):
        bands = cols[col]
        for (pa, sa), (pb, sb) in zip(bands, bands[1:]):
            loops.append((col, pa, pb, sa, sb))
    g = len(loops)
    V = np.zeros((g, g), dtype=np.int64)
    for x in range(g):
        cx, ax1, ax2, sx1, sx2 = loops[x]
        V[x, x] = -(sx1 + sx2) // 2
        for y in range(x + 1, g):
            cy, by1, by2, sy1, sy2 = loops[y]
            if cy == cx:
                # loops listed in band order, so only y directly after x shares
                # a band (the one at position ax2, of sign sx2)
                if by1 == ax2:
                    if sx2 == 1:
                        V[x, y] = 1
                    else:
                        V[y, x] = -1
            elif abs(cy - cx) == 1:
                lo, hi = (x, y) if cx < cy else (y, x)
                a1, a2 = loops[lo][1], loops[lo][2]
                b1, b2 = loops[hi][1], loops[hi][2]
                if a1 < b1 < a2 < b2:
                    V[lo, hi] = 1
                elif b1 < a1 < b2 < a2:
                    V[lo, hi] = -1
    return V


class _Int64Overflow(Exception):
    pass


_INT64_GUARD = int(2 ** 30)


def _signature_reduce(M: np.ndarray, guard: bool) -> int:
    """Signature by fraction-free symmetric congruence reduction (Bareiss).

    Pivots are consecutive leading minors of the running congruent matrix;
    each contributes sign(d_k * d_{k-1}).  Zero pivots are repaired by a
    symmetric swap with a nonzero diagonal or, failing that, by adding a row
    and column pair, both congruence moves.  Fully zero rows are radical
    directions and contribute nothing.
    """
    m = M.shape[0]
    sig = 0
    prev = 1
    for k in range(m):
        if M[k, k] == 0:
            fixed = False
            for j in range(k + 1, m):
                if M[j, j] != 0:
                    M[[k, j], :] = M[[j, k], :]
                    M[:, [k, j]] = M[:, [j, k]]
                    fixed = True
                    break
            if not fixed:
                for j in range(k + 1, m):
                    if M[k, j] != 0:
                        if guard and max(int(np.max(np.abs(M[k, :]))),
                                         int(np.max(np.abs(M[j, :])))) > 2 ** 61:
                            raise _Int64Overflow
                        M[k, :] += M[j, :]
                        M[:, k] += M[:, j]
                        fixed = True
                        break
            if not fixed:
                continue
        p = int(M[k, k])
        sig += 1 if (p > 0) == (prev > 0) else -1
        if k + 1 < m:
            sub = M[k + 1:, k + 1:]
            col = M[k + 1:, k]
            if guard:
                peak = max(int(np.max(np.abs(sub))), 1) * abs(p) \
                    + int(np.max(np.abs(col))) ** 2
                if peak > 2 ** 62:
                    raise _Int64Overflow
            M[k + 1:, k + 1:] = (sub * p - np.outer(col, col)) // prev
        prev = p
    return sig


def signature_of_form(sym: np.ndarray) -> int:
    """Signature of a symmetric integer matrix, exactly."""
    if sym.size == 0:
        return 0
    if np.max(np.abs(sym), initial=0) < _INT64_GUARD:
        try:
            return _signature_reduce(sym.astype(np.int64, copy=True), guard=True)
        except _Int64Overflow:
            pass
    boxed = np.array([[int(v) for v in row] for row in sym], dtype=object)
    return _signature_reduce(boxed, guard=False)


def signature(word: BraidWord) -> int:
    """Link signature of the braid closure (exact integer arithmetic)."""
    V = seifert_matrix(word)
    return signature_of_form(V + V.T)


@dataclass(frozen=True)
class HomogenizedValue:
    value: float
    sequence: tuple[tuple[int, float], ...]
    gap: float


def homogenized_signature(word: BraidWord, depth: int) -> HomogenizedValue:
    """Estimates lim signature(word^k)/k by the last term of the sequence."""
    if depth < 2:
        raise ValueError("homogenization depth must be >= 2")
    seq = []
    for k in range(1, depth + 1):
        seq.append((k, signature(word.power(k)) / k))
    gap = abs(seq[-1][1] - seq[-2][1])
    return HomogenizedValue(seq[-1][1], tuple(seq), gap)


_RATIO_CACHE: dict[int, Fraction] = {}
_RATIO_LOCK = threading.Lock()


def calibrate_ratio(n: int, depth: int = 6) -> Fraction:
    """Full-twist signature growth rate divided by the full twist's writhe.

    signature(full_twist(n)^k) is affine in k, so the rate is read off from
    the first repeated difference, exactly.  Cached per strand count.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    with _RATIO_LOCK:
        if n in _RATIO_CACHE:
            return _RATIO_CACHE[n]
    twist = full_twist(n)
    sigs = [signature(twist.power(k)) for k in range(1, depth + 1)]
    diffs = [b - a for a, b in zip(sigs, sigs[1:])]
    rate = None
    for d_prev, d_next in zip(diffs, diffs[1:]):
        if d_prev == d_next:
            rate = d_next
            break
    if rate is None:
        raise CalibrationError(
            f"signature increments of the {n}-strand full twist did not "
            f"stabilize within depth {depth}: {sigs}")
    ratio = Fraction(rate, n * (n - 1))
    with _RATIO_LOCK:
        _RATIO_CACHE[n] = ratio
    return ratio


@dataclass(frozen=True)
class QmOnBraids:
    """Choice of braid invariant fed to the flow averaging.

    kind "raw-signature" uses the plain closure signature; the flow-level
    slope in T removes the bounded discrepancy with the homogenization.
    kind "s-combination" additionally subtracts ratio * writhe, which kills
    the full-twist direction and so also the ambient rotation class.
    """

    kind: str = "s-combination"
    ratio: Fraction | None = None
    n_strands: int | None = None
    depth: int = 4
    homogenize: bool = False

    def __post_init__(self):
        if self.kind not in ("raw-signature", "s-combination"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def _checked_ratio(self, word: BraidWord) -> Fraction:
        if self.kind == "raw-signature":
            return Fraction(0)
        if self.ratio is None or self.n_strands != word.n_strands:
            raise UncalibratedRatioError(
                f"ratio not calibrated for {word.n_strands} strands "
                f"(have n_strands={self.n_strands})")
        return self.ratio


def qm_for_strands(n: int, kind: str = "s-combination", depth: int = 4) -> QmOnBraids:
    ratio = calibrate_ratio(n) if kind == "s-combination" else None
    return QmOnBraids(kind=kind, ratio=ratio, n_strands=n, depth=depth)


def raw_combination(word: BraidWord, qm: QmOnBraids) -> Fraction:
    """signature - ratio * writhe without homogenization (fast MC path)."""
    ratio = qm._checked_ratio(word)
    return Fraction(signature(word)) - ratio * writhe(word)


def s_value(word: BraidWord, qm: QmOnBraids) -> float:
    """Homogenized signature minus ratio * writhe (writhe is homogeneous)."""
    ratio = qm._checked_ratio(word)
    if not word.letters:
        return 0.0
    hom = homogenized_signature(word, max(qm.depth, 2))
    return hom.value - float(ratio) * writhe(word)


def evaluate_word(word: BraidWord, qm: QmOnBraids) -> float:
    """The invariant the flow averaging integrates, per the qm settings.

    Without homogenize this is signature - ratio * writhe (ratio 0 for the
    raw kind); the bounded gap to the homogenized value drops out of any
    slope in the flow duration.
    """
    if qm.homogenize:
        return s_value(word, qm)
    return float(raw_combination(word, qm))


def defect_estimate(n_strands: int, sampler, trials: int,
                    seed: int = 0, value_fn=None) -> float:
    """Empirical lower bound for the defect sup |r(xy) - r(x) - r(y)|."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if value_fn is None:
        value_fn = signature
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5eed)))
    worst = 0.0
    for _ in range(trials):
        x = sampler(rng, n_strands)
        y = sampler(rng, n_strands)
        d = abs(float(value_fn(x * y)) - float(value_fn(x)) - float(value_fn(y)))
        worst = max(worst, d)
    return worst


def length_sampler(max_letters: int):
    """Sampler factory for defect_estimate: uniform length up to max_letters."""
    def sample(rng: np.random.Generator, n_strands: int) -> BraidWord:
        return random_word(rng, n_strands, int(rng.integers(1, max_letters + 1)))
    return sample
