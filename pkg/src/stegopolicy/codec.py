"""Arithmetic-coding embed/extract between uniform bits and token streams.

Embedding runs an arithmetic *decoder* over the message: the bits (read as
the binary expansion of a point in [0, 1)) select, step by step, the cell of
each provider distribution that contains the point, and the cell index is
the emitted token.  Extraction runs the matching *encoder*: it narrows the
same intervals from the tokens and emits every bit of the message point that
the final interval pins down.  With i.i.d. uniform input bits each emitted
token is distributed per the provider's vector, which is what makes the
token stream mimic the target process.

Registers are 64-bit with the classic carry/renormalization scheme; cell
boundaries are cumulative probabilities quantized to 32 fractional bits with
round-down splits, so cells never overlap and always cover the full range.
Messages shorter than what ``n`` tokens can carry are padded with a seeded
uniform tail; the seed is part of the embed output and the ``consumed``
count delimits the real payload.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .model import ChainParams, Policy

__all__ = [
    "BitStream",
    "IntervalState",
    "DistributionProvider",
    "FixedProvider",
    "ChainProvider",
    "EmbedResult",
    "ProviderError",
    "DecodeError",
    "PrecisionError",
    "bits_to_interval",
    "embed",
    "extract",
    "measure_rate",
]

CODE_BITS = 64
FULL = 1 << CODE_BITS
HALF = FULL >> 1
QUARTER = FULL >> 2
THREE_QUARTERS = HALF + QUARTER
FREQ_BITS = 32
FREQ_TOTAL = 1 << FREQ_BITS


class ProviderError(ValueError):
    """A distribution provider returned an invalid probability vector."""


class DecodeError(ValueError):
    """A token fell in a zero-probability cell of the provider distribution."""


class PrecisionError(RuntimeError):
    """The fixed-precision registers cannot represent the requested cells."""


@dataclass(frozen=True)
class BitStream:
    """An MSB-first bit string stored as bytes plus an exact bit count."""

    data: bytes
    nbits: int

    def __post_init__(self) -> None:
        if self.nbits < 0 or self.nbits > 8 * len(self.data):
            raise ValueError(f"bit count {self.nbits} exceeds buffer size")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitStream":
        buf = bytearray()
        count = 0
        current = 0
        for bit in bits:
            if bit not in (0, 1):
                raise ValueError(f"bits must be 0 or 1, got {bit!r}")
            current = (current << 1) | bit
            count += 1
            if count % 8 == 0:
                buf.append(current)
                current = 0
        if count % 8:
            buf.append(current << (8 - count % 8))
        return cls(data=bytes(buf), nbits=count)

    @classmethod
    def from_bytes(cls, raw: bytes, nbits: Optional[int] = None) -> "BitStream":
        return cls(data=bytes(raw), nbits=8 * len(raw) if nbits is None else nbits)

    def __len__(self) -> int:
        return self.nbits

    def bit(self, i: int) -> int:
        if not (0 <= i < self.nbits):
            raise IndexError(i)
        return (self.data[i >> 3] >> (7 - (i & 7))) & 1

    def bits(self) -> list[int]:
        return [self.bit(i) for i in range(self.nbits)]

    def to01(self) -> str:
        return "".join("01"[b] for b in self.bits())


class DistributionProvider(Protocol):
    """Deterministic map from emitted-token history to a probability vector.

    The returned vector must be nonnegative and sum to 1 within 1e-9, and the
    provider must be a pure function of the history: the extractor replays
    the exact same sequence of distributions to invert the embedding.
    """

    def __call__(self, history: Sequence[int]) -> Sequence[float]: ...


class FixedProvider:
    """History-independent provider emitting one fixed distribution."""

    def __init__(self, probs: Sequence[float]):
        self.probs = tuple(float(p) for p in probs)

    def __call__(self, history: Sequence[int]) -> Sequence[float]:
        return self.probs


class ChainProvider:
    """Two-state chain driven by a policy: state = last emitted token.

    The first token (empty history) is drawn from the marginal next-state
    distribution under the instance's initial state mass, so the emitted
    stream matches the chain started from its initial distribution.
    """

    def __init__(self, policy: Policy, params: ChainParams):
        self._first = params.init0 * policy.a0 + params.init1 * policy.a1
        self._a = (policy.a0, policy.a1)

    def __call__(self, history: Sequence[int]) -> Sequence[float]:
        if not history:
            p = self._first
        else:
            p = self._a[history[-1]]
        return (p, 1.0 - p)


def bits_to_interval(bits: BitStream) -> tuple[Fraction, Fraction]:
    """Exact dyadic interval [0.b1..bL, 0.b1..bL + 2^-L) of a bit string."""
    if bits.nbits == 0:
        return Fraction(0), Fraction(1)
    value = 0
    for i in range(bits.nbits):
        value = (value << 1) | bits.bit(i)
    lo = Fraction(value, 1 << bits.nbits)
    return lo, lo + Fraction(1, 1 << bits.nbits)


def _freq_bounds(probs: Sequence[float]) -> list[int]:
    """Cumulative cell boundaries on a 32-bit scale, zero-prob cells empty.

    Round-to-nearest boundaries are repaired so that every cell with
    positive probability keeps at least one count; cells with exactly zero
    probability collapse to empty.
    """
    k = len(probs)
    if k == 0:
        raise ProviderError("provider returned an empty vector")
    total = 0.0
    for p in probs:
        if not np.isfinite(p) or p < -1e-12:
            raise ProviderError(f"invalid probability {p!r}")
        total += p
    if abs(total - 1.0) > 1e-9:
        raise ProviderError(f"probabilities sum to {total!r}, not 1")

    bounds = [0]
    cum = 0.0
    for p in probs[:-1]:
        cum += p
        bounds.append(min(FREQ_TOTAL, max(0, round(cum * FREQ_TOTAL))))
    bounds.append(FREQ_TOTAL)

    for i in range(1, k + 1):
        if bounds[i] < bounds[i - 1]:
            bounds[i] = bounds[i - 1]
    for i in range(k):
        if probs[i] > 0.0 and bounds[i + 1] <= bounds[i]:
            bounds[i + 1] = bounds[i] + 1
    if bounds[k] != FREQ_TOTAL:
        bounds[k] = FREQ_TOTAL
        for i in range(k - 1, 0, -1):
            cap = bounds[i + 1] - (1 if probs[i] > 0.0 else 0)
            if bounds[i] > cap:
                bounds[i] = cap
    for i in range(k):
        if bounds[i + 1] < bounds[i] or (probs[i] > 0.0 and bounds[i + 1] <= bounds[i]):
            raise PrecisionError(
                "alphabet too fine for the 32-bit frequency scale"
            )
    return bounds


class IntervalState:
    """64-bit low/high registers with the straddle-carry counter.

    ``low < high`` always holds (inclusive-high convention) and
    renormalization keeps the width above a quarter of the register range,
    so any cell of probability >= 2^-32 keeps a nonzero register width.
    """

    __slots__ = ("low", "high", "pending")

    def __init__(self) -> None:
        self.low = 0
        self.high = FULL - 1
        self.pending = 0

    @property
    def width(self) -> int:
        return self.high - self.low + 1

    def narrow(self, bounds: list[int], k: int) -> None:
        width = self.width
        new_high = self.low + (width * bounds[k + 1]) // FREQ_TOTAL - 1
        new_low = self.low + (width * bounds[k]) // FREQ_TOTAL
        if new_high < new_low:
            raise PrecisionError("interval narrower than register precision")
        self.low, self.high = new_low, new_high

    def locate(self, bounds: list[int], value: int) -> int:
        """Cell index whose register range contains ``value``."""
        scaled = ((value - self.low + 1) * FREQ_TOTAL - 1) // self.width
        return bisect_right(bounds, scaled) - 1

    def pop_event(self) -> Optional[int]:
        """Apply one renormalization step; returns the register offset shifted out.

        0 for the lower half, HALF for the upper half, QUARTER for the
        middle straddle, or None once the interval is wide again.  The caller
        mirrors the same offset on its value register or bit output.
        """
        if self.high < HALF:
            offset = 0
        elif self.low >= HALF:
            offset = HALF
        elif self.low >= QUARTER and self.high < THREE_QUARTERS:
            offset = QUARTER
        else:
            return None
        self.low = (self.low - offset) << 1
        self.high = ((self.high - offset) << 1) | 1
        return offset


@dataclass(frozen=True)
class EmbedResult:
    """Tokens plus how many real message bits they pin down."""

    tokens: tuple[int, ...]
    consumed: int
    pad_seed: int


class _BitSource:
    """Message bits followed by an endless seeded uniform tail."""

    def __init__(self, message: BitStream, pad_seed: int):
        self._message = message
        self._pos = 0
        self._rng = np.random.Generator(np.random.Philox(key=pad_seed))
        self._tail: list[int] = []
        self._tail_pos = 0

    def next(self) -> int:
        if self._pos < self._message.nbits:
            bit = self._message.bit(self._pos)
            self._pos += 1
            return bit
        if self._tail_pos >= len(self._tail):
            self._tail = self._rng.integers(0, 2, size=4096).tolist()
            self._tail_pos = 0
        bit = self._tail[self._tail_pos]
        self._tail_pos += 1
        return bit


def embed(
    bits: BitStream,
    provider: DistributionProvider,
    n: int,
    *,
    pad_seed: int = 0,
) -> EmbedResult:
    """Map a bit stream into ``n`` tokens distributed per the provider.

    Each step emits the provider cell containing the message point.  The
    renormalization ledger counts how many leading source bits the interval
    has pinned down; ``consumed = min(len(bits), pinned)`` is the prefix the
    extractor is guaranteed to reproduce exactly.
    """
    if n < 1:
        raise ValueError(f"token count must be >= 1, got {n!r}")
    source = _BitSource(bits, pad_seed)
    value = 0
    for _ in range(CODE_BITS):
        value = (value << 1) | source.next()

    state = IntervalState()
    resolved = 0
    tokens: list[int] = []
    for _ in range(n):
        bounds = _freq_bounds(provider(tokens))
        k = state.locate(bounds, value)
        state.narrow(bounds, k)
        tokens.append(k)
        while True:
            offset = state.pop_event()
            if offset is None:
                break
            if offset != QUARTER:
                resolved += 1 + state.pending
                state.pending = 0
            else:
                state.pending += 1
            value = ((value - offset) << 1) | source.next()

    return EmbedResult(
        tokens=tuple(tokens),
        consumed=min(bits.nbits, resolved),
        pad_seed=pad_seed,
    )


def extract(tokens: Sequence[int], provider: DistributionProvider) -> BitStream:
    """Recover every message-point bit the token sequence determines.

    Replays the same interval narrowing as :func:`embed` and emits the bits
    resolved by renormalization.  The output is a prefix of the embedder's
    source stream (message followed by the recorded pad) and covers at least
    the declared ``consumed`` count; the last straddle bits stay undetermined
    and are not emitted.
    """
    state = IntervalState()
    out: list[int] = []
    history: list[int] = []
    for k in tokens:
        probs = provider(history)
        bounds = _freq_bounds(probs)
        if not (0 <= k < len(probs)):
            raise DecodeError(f"token {k!r} outside the provider alphabet")
        if bounds[k + 1] <= bounds[k]:
            raise DecodeError(f"token {k!r} has zero probability")
        state.narrow(bounds, k)
        while True:
            offset = state.pop_event()
            if offset is None:
                break
            if offset == QUARTER:
                state.pending += 1
            else:
                bit = 1 if offset == HALF else 0
                out.append(bit)
                out.extend([bit ^ 1] * state.pending)
                state.pending = 0
        history.append(k)
    return BitStream.from_bits(out)


def measure_rate(
    policy: Policy,
    params: ChainParams,
    n: int,
    *,
    seed: int = 0,
    provider: Optional[DistributionProvider] = None,
) -> float:
    """Embedding rate in bits per token over ``n`` policy-driven tokens.

    Runs :func:`embed` with fresh uniform message bits (enough that the
    message never runs out) and returns ``consumed / n``.  Converges to the
    stationary entropy rate of the policy-driven chain.
    """
    if n < 1000:
        raise ValueError(f"rate measurement needs n >= 1000, got {n!r}")
    if provider is None:
        provider = ChainProvider(policy, params)
    rng = np.random.Generator(np.random.Philox(seed=np.random.SeedSequence((seed, 0))))
    message = BitStream.from_bits(rng.integers(0, 2, size=n + 2 * CODE_BITS).tolist())
    result = embed(message, provider, n, pad_seed=seed + 1)
    return result.consumed / n
