"""Interval type-2 fuzzy trust inference.

Maps the two transmission evidences of a watched node -- packet dropping
rate (DPR) and packet delaying rate (DLR), both in [0, 1] -- to a scalar
trust value in [0, 1].

The inference runs in seven stages:

1. grade each input against its three terms (low / medium / high),
2. fire the nine rules with the product t-norm,
3. alpha-cut each fired rule's output set: symmetric output sets yield
   one interval per slope at half the firing grade, shoulder sets yield
   a single interval at full grade (16 intervals total),
4. collapse each interval to its midpoint and grade it against the
   output set's lower and upper membership functions,
5. normalize the lower and upper grade families separately by their
   maxima and sort the 16 pairs by trust value,
6. type-reduce to the interval [T_L, T_R] with a switch-point search
   (left endpoint minimized, right endpoint maximized),
7. defuzzify: trust = (T_L + T_R) / 2.

All functions are pure; an evaluator instance is immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import configparser
import io
from bisect import bisect_right
from dataclasses import dataclass, field

INPUT_TERMS = ("low", "medium", "high")

# Output terms ordered from apex 0 to apex 1.
OUTPUT_TERMS = (
    "complete_distrust",
    "intense_distrust",
    "distrust",
    "medium_distrust",
    "medium_trust",
    "trust",
    "complete_trust",
)

LEFT_SHOULDER = "left-shoulder"
SYMMETRIC = "symmetric-triangle"
RIGHT_SHOULDER = "right-shoulder"

#: number of value pairs produced by one inference:
#: 7 symmetric-set rules x 2 slopes + 2 shoulder-set rules x 1 slope.
PAIR_COUNT = 16

NEUTRAL_TRUST = 0.5


class MembershipFunction:
    """Piecewise-linear membership function on the unit interval.

    Defined by breakpoints (x, grade) with strictly increasing x that
    must start at 0 and end at 1; evaluation interpolates linearly and
    raises outside [0, 1].
    """

    __slots__ = ("xs", "grades")

    def __init__(self, breakpoints):
        pts = [(float(x), float(g)) for x, g in breakpoints]
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        xs = [p[0] for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"breakpoint x values must strictly increase: {xs}")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValueError("breakpoints must span [0, 1] exactly")
        if any(not 0.0 <= p[1] <= 1.0 for p in pts):
            raise ValueError("grades must lie in [0, 1]")
        self.xs = tuple(xs)
        self.grades = tuple(p[1] for p in pts)

    def __call__(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"membership argument {x!r} outside [0, 1]")
        i = bisect_right(self.xs, x)
        if i == len(self.xs):
            return self.grades[-1]
        x0, x1 = self.xs[i - 1], self.xs[i]
        g0, g1 = self.grades[i - 1], self.grades[i]
        return g0 + (g1 - g0) * (x - x0) / (x1 - x0)

    @property
    def apex(self) -> float:
        """x of the (first) maximum grade."""
        return self.xs[max(range(len(self.grades)), key=self.grades.__getitem__)]

    @property
    def peak(self) -> float:
        return max(self.grades)

    def crossing(self, grade: float, side: str, apex: float) -> float:
        """x where the function passes ``grade`` on one slope.

        ``side`` selects the region left or right of ``apex``; grades are
        assumed monotone toward the apex there, which holds for triangle
        and shoulder sets.
        """
        if grade > self(apex):
            raise ValueError("cut grade above the slope's peak")
        pts = list(zip(self.xs, self.grades))
        if side == "left":
            seg = [p for p in pts if p[0] <= apex]
            if not seg or seg[-1][0] < apex:
                seg.append((apex, self(apex)))
            for (x0, g0), (x1, g1) in zip(seg, seg[1:]):
                if g0 <= grade <= g1:
                    if g1 == g0:
                        return x1
                    return x0 + (grade - g0) * (x1 - x0) / (g1 - g0)
            return seg[0][0]
        if side == "right":
            seg = [p for p in pts if p[0] >= apex]
            if not seg or seg[0][0] > apex:
                seg.insert(0, (apex, self(apex)))
            for (x0, g0), (x1, g1) in zip(seg, seg[1:]):
                if g1 <= grade <= g0:
                    if g1 == g0:
                        return x0
                    return x0 + (g0 - grade) * (x1 - x0) / (g0 - g1)
            return seg[-1][0]
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


class IT2FuzzySet:
    """Interval type-2 set: an upper and a lower membership function.

    The region between the two functions is the footprint of
    uncertainty; containment (lower <= upper everywhere) is checked on a
    grid at construction.
    """

    __slots__ = ("name", "upper", "lower", "shape_kind", "apex")

    def __init__(self, name, upper, lower, shape_kind):
        if shape_kind not in (LEFT_SHOULDER, SYMMETRIC, RIGHT_SHOULDER):
            raise ValueError(f"unknown shape kind {shape_kind!r}")
        self.name = name
        self.upper = upper
        self.lower = lower
        self.shape_kind = shape_kind
        self.apex = upper.apex
        if abs(self.apex - lower.apex) > 1e-12:
            raise ValueError(f"{name}: upper and lower apexes differ")
        if shape_kind == LEFT_SHOULDER and self.apex != 0.0:
            raise ValueError(f"{name}: left shoulder must peak at x=0")
        if shape_kind == RIGHT_SHOULDER and self.apex != 1.0:
            raise ValueError(f"{name}: right shoulder must peak at x=1")
        for i in range(1001):
            x = i / 1000.0
            if lower(x) > upper(x) + 1e-12:
                raise ValueError(f"{name}: lower exceeds upper at x={x}")

    def slope_cut(self, side: str, grade: float) -> tuple[float, float]:
        """Horizontal cut of one slope of the footprint of uncertainty.

        Returns the interval between the upper-function crossing and the
        lower-function crossing at ``grade``; above the lower function's
        peak the lower crossing degenerates to the apex.
        """
        if not 0.0 < grade <= 1.0:
            raise ValueError("cut grade must lie in (0, 1]")
        xu = self.upper.crossing(grade, side, self.apex)
        if grade >= self.lower.peak:
            xl = self.apex
        else:
            xl = self.lower.crossing(grade, side, self.apex)
        return (xu, xl) if xu <= xl else (xl, xu)


@dataclass(frozen=True)
class Rule:
    """One inference rule: IF dlr is X and dpr is Y THEN trust is Z."""

    dlr_term: str
    dpr_term: str
    output_term: str


#: The nine-rule base: the full 3x3 grid of (dlr, dpr) terms.
DEFAULT_RULES = (
    Rule("low", "low", "complete_trust"),
    Rule("medium", "low", "trust"),
    Rule("high", "low", "medium_trust"),
    Rule("low", "medium", "medium_trust"),
    Rule("medium", "medium", "medium_distrust"),
    Rule("high", "medium", "distrust"),
    Rule("low", "high", "distrust"),
    Rule("medium", "high", "intense_distrust"),
    Rule("high", "high", "complete_distrust"),
)


@dataclass(frozen=True)
class CutEntry:
    """One alpha-cut interval with the grade it carries."""

    t_left: float
    t_right: float
    grade: float
    rule_index: int  # 1-based
    output_term: str


@dataclass(frozen=True)
class TrustPair:
    """A trust value with its grade interval against the output set."""

    value: float
    grade_lower: float
    grade_upper: float
    rule_index: int = 0


@dataclass(frozen=True)
class TypeReducedInterval:
    """Result of type reduction: [left, right] plus the switch points."""

    left: float
    right: float
    left_switch: int
    right_switch: int


def _validate_rules(rules):
    if len(rules) != 9:
        raise ValueError("rule base must hold exactly nine rules")
    grid = {(r.dlr_term, r.dpr_term) for r in rules}
    want = {(a, b) for a in INPUT_TERMS for b in INPUT_TERMS}
    if grid != want:
        raise ValueError("rules must cover the full 3x3 input-term grid")
    for r in rules:
        if r.output_term not in OUTPUT_TERMS:
            raise ValueError(f"unknown output term {r.output_term!r}")


def _switch_ratio(values, lo_w, hi_w, switch):
    """Weighted mean with high weights up to ``switch`` (1-based), low after.

    Returns None when the total weight is zero (invalid switch point).
    """
    num = 0.0
    den = 0.0
    for v in range(len(values)):
        w = hi_w[v] if v < switch else lo_w[v]
        num += w * values[v]
        den += w
    if den == 0.0:
        return None
    return num / den


class TrustEvaluator:
    """The complete inference engine over a fixed rule base and set layout.

    Immutable after construction; ``evaluate_trust`` memoizes results so
    repeated evidence histories are cheap.
    """

    def __init__(self, input_sets, output_sets, rules=DEFAULT_RULES, cache_size=1 << 18):
        if set(input_sets) != set(INPUT_TERMS):
            raise ValueError("input sets must define low, medium, high")
        if set(output_sets) != set(OUTPUT_TERMS):
            raise ValueError("output sets must define all seven trust terms")
        _validate_rules(rules)
        self.input_sets = dict(input_sets)
        self.output_sets = dict(output_sets)
        self.rules = tuple(rules)
        self._cache = {}
        self._cache_cap = cache_size

    # -- stage 1 & 2 ---------------------------------------------------

    def fire_rules(self, dpr: float, dlr: float) -> list[float]:
        """Product-t-norm firing grade of each of the nine rules."""
        if not 0.0 <= dpr <= 1.0:
            raise ValueError(f"dpr {dpr!r} outside [0, 1]")
        if not 0.0 <= dlr <= 1.0:
            raise ValueError(f"dlr {dlr!r} outside [0, 1]")
        dpr_g = {t: self.input_sets[t](dpr) for t in INPUT_TERMS}
        dlr_g = {t: self.input_sets[t](dlr) for t in INPUT_TERMS}
        return [dlr_g[r.dlr_term] * dpr_g[r.dpr_term] for r in self.rules]

    # -- stage 3 ---------------------------------------------------------

    def alpha_cut_intervals(self, firing_grades) -> list[CutEntry]:
        """Cut each rule's output set at its firing grade.

        Symmetric sets contribute one interval per slope, each at half
        the firing grade; shoulder sets contribute a single full-grade
        interval.  Rules that did not fire contribute degenerate
        zero-grade entries at the set apex so the output always holds
        exactly 16 entries.
        """
        if len(firing_grades) != 9:
            raise ValueError("expected nine firing grades")
        entries = []
        for k, (rule, g) in enumerate(zip(self.rules, firing_grades), start=1):
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"firing grade {g!r} outside [0, 1]")
            s = self.output_sets[rule.output_term]
            if s.shape_kind == SYMMETRIC:
                if g == 0.0:
                    entries.append(CutEntry(s.apex, s.apex, 0.0, k, rule.output_term))
                    entries.append(CutEntry(s.apex, s.apex, 0.0, k, rule.output_term))
                else:
                    half = g / 2.0
                    lo, hi = s.slope_cut("left", g)
                    entries.append(CutEntry(lo, hi, half, k, rule.output_term))
                    lo, hi = s.slope_cut("right", g)
                    entries.append(CutEntry(lo, hi, half, k, rule.output_term))
            else:
                side = "right" if s.shape_kind == LEFT_SHOULDER else "left"
                if g == 0.0:
                    entries.append(CutEntry(s.apex, s.apex, 0.0, k, rule.output_term))
                else:
                    lo, hi = s.slope_cut(side, g)
                    entries.append(CutEntry(lo, hi, g, k, rule.output_term))
        assert len(entries) == PAIR_COUNT
        return entries

    # -- stage 4 ---------------------------------------------------------

    def to_trust_pairs(self, entries) -> list[TrustPair]:
        """Collapse intervals to midpoints graded against their output set.

        Zero-grade (unfired) entries keep zero grades so they carry no
        weight through type reduction.
        """
        pairs = []
        for e in entries:
            ta = (e.t_left + e.t_right) / 2.0
            if e.grade == 0.0:
                pairs.append(TrustPair(ta, 0.0, 0.0, e.rule_index))
            else:
                s = self.output_sets[e.output_term]
                pairs.append(TrustPair(ta, s.lower(ta), s.upper(ta), e.rule_index))
        return pairs

    # -- stage 5 ---------------------------------------------------------

    @staticmethod
    def normalize_and_sort(pairs) -> list[TrustPair]:
        """Scale each grade family by its maximum and sort by trust value.

        The sort is stable, so ties keep rule order.  With every grade
        zero the grades pass through unscaled.
        """
        max_gl = max(p.grade_lower for p in pairs)
        max_gu = max(p.grade_upper for p in pairs)
        out = []
        for p in pairs:
            gl = p.grade_lower / max_gl if max_gl > 0.0 else p.grade_lower
            gu = p.grade_upper / max_gu if max_gu > 0.0 else p.grade_upper
            out.append(TrustPair(p.value, gl, gu, p.rule_index))
        out.sort(key=lambda p: p.value)
        return out

    # -- stage 6 ---------------------------------------------------------

    @staticmethod
    def type_reduce(pairs) -> TypeReducedInterval:
        """Center-of-sets type reduction over sorted trust pairs.

        The left endpoint minimizes the switch-point ratio (upper grades
        below the switch, lower above); the right endpoint maximizes the
        mirrored ratio.  Iterative switch search; the result equals an
        exhaustive scan of all switch points.
        """
        n = len(pairs)
        values = [p.value for p in pairs]
        gl = [p.grade_lower for p in pairs]
        gu = [p.grade_upper for p in pairs]
        if all(u == 0.0 for u in gu) and all(l == 0.0 for l in gl):
            raise ValueError("degenerate trust set: every grade is zero")

        # Left endpoint: walk the switch up from 1, promoting one pair at
        # a time from its lower to its upper grade, until the running
        # centroid drops below the next trust value.
        a = sum(g * x for g, x in zip(gl, values))
        b = sum(gl)
        i = 0
        while i < n - 1:
            i += 1
            d = gu[i - 1] - gl[i - 1]
            a += values[i - 1] * d
            b += d
            if b > 0.0:
                if a / b <= values[i]:
                    break
        left_switch = i
        left = _switch_ratio(values, gl, gu, left_switch)

        # Right endpoint: walk the switch down from n-1, promoting pairs
        # at the top end, until the centroid rises above the switch value.
        a = sum(g * x for g, x in zip(gl, values))
        b = sum(gl)
        r = n
        while r > 1:
            d = gu[r - 1] - gl[r - 1]
            a += values[r - 1] * d
            b += d
            r -= 1
            if b > 0.0:
                if a / b >= values[r - 1]:
                    break
        right_switch = r
        right = _switch_ratio(values, gu, gl, right_switch)

        if left is None or right is None:
            raise ValueError("type reduction found no weighted switch point")
        if left > right:
            # Mathematically equal endpoints can land a rounding unit
            # apart when zero-weight pairs make switch points degenerate.
            left, right = right, left
            left_switch, right_switch = right_switch, left_switch
        return TypeReducedInterval(left, right, left_switch, right_switch)

    # -- stage 7 / full pipeline ------------------------------------------

    def _evaluate(self, dpr, dlr):
        firings = self.fire_rules(dpr, dlr)
        if not any(firings):
            return NEUTRAL_TRUST
        entries = self.alpha_cut_intervals(firings)
        pairs = self.normalize_and_sort(self.to_trust_pairs(entries))
        reduced = self.type_reduce(pairs)
        return (reduced.left + reduced.right) / 2.0

    def evaluate_trust(self, dpr: float, dlr: float) -> float:
        """Trust in [0, 1] for the given evidence rates (memoized)."""
        key = (dpr, dlr)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._evaluate(dpr, dlr)
            if len(self._cache) < self._cache_cap:
                self._cache[key] = hit
        return hit


# -- default set layout ------------------------------------------------------


DEFAULT_INPUT_SHOULDER_SPAN = 0.25


def default_input_sets(shoulder_span=DEFAULT_INPUT_SHOULDER_SPAN) -> dict:
    """Three-term partition: shoulders at 0 and 1, triangle apex at 0.5.

    The shoulders fall off within ``shoulder_span`` so that evidence
    rates around the typical attack operating point (a fifth of packets
    harmed) register as clearly non-low; stretching the shoulders to the
    triangle apex flattens the trust response exactly where the
    discrimination is needed.
    """
    if not 0.0 < shoulder_span <= 0.5:
        raise ValueError("shoulder span must lie in (0, 0.5]")
    return {
        "low": MembershipFunction([(0.0, 1.0), (shoulder_span, 0.0), (1.0, 0.0)]),
        "medium": MembershipFunction([(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]),
        "high": MembershipFunction([(0.0, 0.0), (1.0 - shoulder_span, 0.0), (1.0, 1.0)]),
    }


def _triangle_points(apex, half_width, height):
    """Breakpoints of a triangle clipped to [0, 1]; shoulders at the ends."""
    lo = apex - half_width
    hi = apex + half_width
    if lo < 0.0 and apex != 0.0:
        raise ValueError("triangle foot crosses 0 away from a shoulder apex")
    if hi > 1.0 and apex != 1.0:
        raise ValueError("triangle foot crosses 1 away from a shoulder apex")
    pts = []
    if lo > 0.0:
        pts.append((0.0, 0.0))
        pts.append((lo, 0.0))
    elif lo == 0.0:
        pts.append((0.0, 0.0))
    pts.append((apex, height))
    if hi < 1.0:
        pts.append((hi, 0.0))
        pts.append((1.0, 0.0))
    elif hi == 1.0:
        pts.append((1.0, 0.0))
    return pts


def default_output_sets(upper_half_width=1.0 / 6.0, lower_half_width=1.0 / 6.0,
                        lower_height=0.8) -> dict:
    """Seven IT2 sets with apexes at k/6.

    Upper functions are unit-height triangles (shoulders at the ends);
    lower functions share the apex and width at reduced height.  Keeping
    the widths equal matters: narrower lower functions drop the
    interval-midpoint grades to zero at moderate firing levels, and the
    inferred trust surface loses its monotone response to the evidence
    rates.
    """
    sets = {}
    for k, name in enumerate(OUTPUT_TERMS):
        apex = k / 6.0
        if k == 0:
            kind = LEFT_SHOULDER
        elif k == 6:
            kind = RIGHT_SHOULDER
        else:
            kind = SYMMETRIC
        upper = MembershipFunction(_triangle_points(apex, upper_half_width, 1.0))
        lower = MembershipFunction(_triangle_points(apex, lower_half_width, lower_height))
        sets[name] = IT2FuzzySet(name, upper, lower, kind)
    return sets


def default_evaluator() -> TrustEvaluator:
    return TrustEvaluator(default_input_sets(), default_output_sets())


# -- loadable set definitions -------------------------------------------------


def _parse_points(text):
    pts = []
    for chunk in text.replace("\n", " ").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, _, g = chunk.partition(":")
        pts.append((float(x), float(g)))
    return pts


def _format_points(mf):
    return ", ".join(f"{x!r}:{g!r}" for x, g in zip(mf.xs, mf.grades))


def evaluator_from_text(text: str) -> TrustEvaluator:
    """Build an evaluator from a sectioned breakpoint definition.

    Sections ``[input.low|medium|high]`` carry a ``points`` key; sections
    ``[output.<term>]`` carry ``kind``, ``upper``, and ``lower`` keys.
    Sets not mentioned keep their default layout.
    """
    cp = configparser.ConfigParser()
    cp.read_string(text)
    inputs = default_input_sets()
    outputs = default_output_sets()
    for section in cp.sections():
        if section.startswith("input."):
            term = section.split(".", 1)[1]
            if term not in INPUT_TERMS:
                raise ValueError(f"unknown input term {term!r}")
            inputs[term] = MembershipFunction(_parse_points(cp[section]["points"]))
        elif section.startswith("output."):
            term = section.split(".", 1)[1]
            if term not in OUTPUT_TERMS:
                raise ValueError(f"unknown output term {term!r}")
            sec = cp[section]
            outputs[term] = IT2FuzzySet(
                term,
                MembershipFunction(_parse_points(sec["upper"])),
                MembershipFunction(_parse_points(sec["lower"])),
                sec["kind"].strip(),
            )
        else:
            raise ValueError(f"unknown section {section!r} in set definition")
    return TrustEvaluator(inputs, outputs)


def evaluator_to_text(evaluator: TrustEvaluator) -> str:
    """Serialize an evaluator's set layout to the loadable text format."""
    cp = configparser.ConfigParser()
    for term in INPUT_TERMS:
        cp[f"input.{term}"] = {"points": _format_points(evaluator.input_sets[term])}
    for term in OUTPUT_TERMS:
        s = evaluator.output_sets[term]
        cp[f"output.{term}"] = {
            "kind": s.shape_kind,
            "upper": _format_points(s.upper),
            "lower": _format_points(s.lower),
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
