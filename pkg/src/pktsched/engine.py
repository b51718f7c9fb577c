"""Step-loop simulation over instances.

Three execution modes:

* ``run_policy``   - deterministic policies, one pass over the steps;
* ``run_rg_exact`` - exact expected gain of the randomized policy, by
  branching on every two-point lottery with exact probabilities (memoized
  on the pending set, which fully determines the future);
* ``run_rg_mc``    - seeded Monte Carlo estimate for instances too large
  for exact branching; every draw compares a 64-bit uniform integer with
  the exact rational threshold, so the lottery itself is bias-free.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .model import Buffer, Instance, InvariantError, Packet, advance_buffer
from .offline import ObliviousSchedule, oblivious_schedule, opt_schedule
from .policies import DETERMINISTIC_POLICIES, decide

DEFAULT_EXACT_CAP = 1 << 20


class ExactCapExceeded(RuntimeError):
    """The branching tree outgrew the configured cap."""


@dataclass(frozen=True)
class StepRecord:
    """What happened in one simulated step."""

    step: int
    scheduled_ids: tuple[str, ...]
    earliest: Packet
    heaviest: Packet
    transmitted: Packet
    gain: Fraction


@dataclass(frozen=True)
class RunReport:
    """Transcript and totals of one deterministic run."""

    policy: str
    per_step: tuple[StepRecord, ...]
    total_gain: Fraction
    opt_value: Fraction
    ratio: Fraction


@dataclass(frozen=True)
class BranchState:
    """A leaf of the randomized policy's branching tree."""

    step: int
    transmitted: frozenset[str]
    probability: Fraction
    gain: Fraction


def run_policy(instance: Instance, policy: str) -> RunReport:
    """Simulate a deterministic policy over all steps and report exact totals."""
    if policy not in DETERMINISTIC_POLICIES:
        raise ValueError(
            f"run_policy needs a deterministic policy, not {policy!r}; "
            "use run_rg_exact or run_rg_mc for rg"
        )
    arrivals = instance.arrivals_by_step
    buffer = Buffer(frozenset(), instance.first_release - 1)
    records: list[StepRecord] = []
    total = Fraction(0)
    for step in range(instance.first_release, instance.horizon + 1):
        buffer = advance_buffer(buffer, step, arrivals.get(step, ()))
        if not buffer.pending:
            continue
        oblivious = oblivious_schedule(buffer.pending, step)
        choice = decide(policy, oblivious).deterministic
        if choice is None or choice not in oblivious.schedule.packets:
            raise InvariantError(f"policy {policy} chose outside the oblivious schedule")
        total += choice.weight
        records.append(
            StepRecord(
                step,
                tuple(p.id for p in oblivious.schedule.sequence()),
                oblivious.earliest,
                oblivious.heaviest,
                choice,
                choice.weight,
            )
        )
        buffer = Buffer(buffer.pending - {choice}, step)
    _, opt_value = opt_schedule(instance.packets, instance.first_release)
    if total > opt_value:
        raise InvariantError("online gain exceeded the offline optimum")
    ratio = Fraction(1) if opt_value == 0 else opt_value / total
    return RunReport(policy, tuple(records), total, opt_value, ratio)


def run_rg_exact(
    instance: Instance, cap: int = DEFAULT_EXACT_CAP
) -> tuple[Fraction, int]:
    """Exact expected gain of the randomized policy and the branching-tree
    leaf count.

    Branches on {earliest, heaviest} at every step where they differ,
    weighting by the exact lottery probabilities.  Memoized on
    (step, pending set); memoization cannot change the expectation because
    the pending set determines everything that follows.  Raises
    ExactCapExceeded once the (tree) leaf count passes ``cap``.
    """
    arrivals = instance.arrivals_by_step
    horizon = instance.horizon
    memo: dict[tuple[int, frozenset[Packet]], tuple[Fraction, int]] = {}
    spent = 0

    def spend(leaves: int) -> None:
        nonlocal spent
        spent += leaves
        if spent > cap:
            raise ExactCapExceeded(
                f"instance too large for exact mode (branching leaves > {cap})"
            )

    def advance(pending: frozenset[Packet], step: int) -> frozenset[Packet]:
        kept = frozenset(p for p in pending if p.deadline > step)
        return kept | frozenset(arrivals.get(step, ()))

    def expected(step: int, pending: frozenset[Packet]) -> tuple[Fraction, int]:
        if step > horizon:
            spend(1)
            return Fraction(0), 1
        key = (step, pending)
        hit = memo.get(key)
        if hit is not None:
            spend(hit[1])
            return hit
        if not pending:
            result = expected(step + 1, advance(pending, step + 1))
        else:
            oblivious = oblivious_schedule(pending, step)
            e, h = oblivious.earliest, oblivious.heaviest
            if e == h:
                sub, leaves = expected(step + 1, advance(pending - {e}, step + 1))
                result = (e.weight + sub, leaves)
            else:
                p_e = e.weight / h.weight
                gain_e, leaves_e = expected(step + 1, advance(pending - {e}, step + 1))
                gain_h, leaves_h = expected(step + 1, advance(pending - {h}, step + 1))
                value = p_e * (e.weight + gain_e) + (1 - p_e) * (h.weight + gain_h)
                result = (value, leaves_e + leaves_h)
        memo[key] = result
        return result

    start = instance.first_release
    value, leaves = expected(start, advance(frozenset(), start))
    _, opt_value = opt_schedule(instance.packets, start)
    if value > opt_value:
        raise InvariantError("expected gain exceeded the offline optimum")
    return value, leaves


def iter_rg_branches(instance: Instance, cap: int = DEFAULT_EXACT_CAP):
    """Yield every leaf of the randomized policy's branching tree.

    Plain enumeration without memoization; probabilities over all yielded
    leaves sum to exactly 1.
    """
    arrivals = instance.arrivals_by_step
    horizon = instance.horizon
    count = 0

    def walk(step, pending, probability, gain, sent):
        nonlocal count
        pending = frozenset(p for p in pending if p.deadline > step) | frozenset(
            arrivals.get(step, ())
        )
        if step > horizon:
            count += 1
            if count > cap:
                raise ExactCapExceeded(
                    f"instance too large for exact mode (branching leaves > {cap})"
                )
            yield BranchState(step, sent, probability, gain)
            return
        if not pending:
            yield from walk(step + 1, pending, probability, gain, sent)
            return
        oblivious = oblivious_schedule(pending, step)
        e, h = oblivious.earliest, oblivious.heaviest
        if e == h:
            yield from walk(
                step + 1, pending - {e}, probability, gain + e.weight, sent | {e.id}
            )
            return
        p_e = e.weight / h.weight
        yield from walk(
            step + 1, pending - {e}, probability * p_e, gain + e.weight, sent | {e.id}
        )
        yield from walk(
            step + 1,
            pending - {h},
            probability * (1 - p_e),
            gain + h.weight,
            sent | {h.id},
        )

    start = instance.first_release
    yield from walk(start, frozenset(), Fraction(1), Fraction(0), frozenset())


def _trial_seed(seed: int, trial: int) -> int:
    """Counter-based per-trial seed; stable across platforms."""
    digest = hashlib.sha256(f"{seed}:{trial}".encode("ascii")).digest()
    return int.from_bytes(digest[:16], "big")


def run_rg_mc(instance: Instance, trials: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of the randomized policy's total gain.

    Trial i draws from a stream derived from (seed, i), so identical
    arguments reproduce identical output bit for bit.  Returns the sample
    mean and its standard error.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    arrivals = instance.arrivals_by_step
    horizon = instance.horizon
    start = instance.first_release
    cache: dict[tuple[int, frozenset[Packet]], ObliviousSchedule] = {}
    totals: list[float] = []
    shift = 1 << 64
    for trial in range(trials):
        rng = random.Random(_trial_seed(seed, trial))
        pending: frozenset[Packet] = frozenset()
        gain = Fraction(0)
        for step in range(start, horizon + 1):
            pending = frozenset(p for p in pending if p.deadline > step) | frozenset(
                arrivals.get(step, ())
            )
            if not pending:
                continue
            key = (step, pending)
            oblivious = cache.get(key)
            if oblivious is None:
                oblivious = oblivious_schedule(pending, step)
                cache[key] = oblivious
            e, h = oblivious.earliest, oblivious.heaviest
            if e == h:
                chosen = e
            else:
                p_e = e.weight / h.weight
                draw = rng.getrandbits(64)
                # draw / 2^64 < p_e, compared exactly in integers.
                chosen = e if draw * p_e.denominator < p_e.numerator * shift else h
            gain += chosen.weight
            pending = pending - {chosen}
        totals.append(float(gain))
    mean = math.fsum(totals) / trials
    if trials == 1:
        return mean, 0.0
    variance = math.fsum((x - mean) ** 2 for x in totals) / (trials - 1)
    return mean, math.sqrt(variance / trials)
