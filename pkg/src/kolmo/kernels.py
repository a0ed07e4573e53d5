"""Transition kernels: exact discrete kernels and closed-form Gaussian kernels.

Two concrete representations cover everything needed here:

* ``DiscreteKernel``: each row ``kappa(w, .)`` is a ``FiniteMeasure``.  Rows
  come either from an explicit table (finite state set) or from a function
  (e.g. translation-invariant kernels on the integers), and are evaluated
  lazily.  With ``Fraction`` weights every operation is exact.
* ``GaussianKernel``: ``kappa_t(x, .) = N(x, t)``.  Integrals are closed
  form for polynomial probes up to degree 8 and for interval indicators.

Products and composition follow the usual conventions:
``compose(k1, k2)(w, A) = sum_w1 k1(w, w1) k2(w1, A)`` (k1 acts first).
Products require substochastic rows.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from scipy.special import ndtr

from .measure import FiniteMeasure

__all__ = [
    "KernelError",
    "IncompatibleKernels",
    "UnsupportedProbe",
    "TableTooLarge",
    "MissingIndex",
    "DiscreteKernel",
    "GaussianKernel",
    "Polynomial",
    "IntervalIndicator",
    "KernelFamily",
    "ConsistentFamily",
    "ProductLawTable",
    "SemigroupCheck",
    "ConsistencyVerdict",
    "ConvolutionCheck",
    "identity_kernel",
    "convolution_kernel",
    "random_walk_kernel",
    "kernel_integral",
    "compose",
    "product_pair",
    "product_finite",
    "convolution_family_check",
    "semidirect_product",
    "kernel_discrepancy",
    "gaussian_semigroup",
    "binomial_family",
    "check_semigroup",
    "check_consistent",
    "format_kernel",
    "parse_kernel",
    "DEFAULT_PROBES",
    "MAX_TABLE_ENTRIES",
]

MAX_TABLE_ENTRIES = 10**6
GAUSSIAN_TOL = 1e-12


class KernelError(ValueError):
    pass


class IncompatibleKernels(KernelError):
    pass


class UnsupportedProbe(KernelError):
    pass


class TableTooLarge(KernelError):
    pass


class MissingIndex(KernelError, KeyError):
    pass


# -- probe functions ------------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """``sum(c_k x**k)``; coefficients in increasing degree."""

    coeffs: tuple[Real, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @classmethod
    def monomial(cls, degree: int) -> "Polynomial":
        return cls((0,) * degree + (1,))

    @property
    def degree(self) -> int:
        return max((k for k, c in enumerate(self.coeffs) if c != 0), default=0)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


@dataclass(frozen=True)
class IntervalIndicator:
    """Indicator of an interval; infinite ends are allowed."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = True
    hi_closed: bool = True

    def __call__(self, x) -> int:
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return 1 if (above and below) else 0


DEFAULT_PROBES = (
    Polynomial.monomial(1),
    Polynomial.monomial(2),
    IntervalIndicator(hi=0.0),
)


# -- kernels --------------------------------------------------------------------


class DiscreteKernel:
    """A kernel whose rows are finite measures over hashable states."""

    def __init__(
        self,
        row_fn: Callable[[Hashable], FiniteMeasure],
        *,
        states: Iterable[Hashable] | None = None,
        stochastic: bool | None = None,
        is_identity: bool = False,
        name: str = "",
    ):
        self._row_fn = row_fn
        self._rows: dict[Hashable, FiniteMeasure] = {}
        self.states = frozenset(states) if states is not None else None
        self._declared_stochastic = stochastic
        self.is_identity = is_identity
        self.name = name

    @classmethod
    def from_rows(cls, rows: Mapping[Hashable, FiniteMeasure | Mapping], name: str = "") -> "DiscreteKernel":
        table = {s: r if isinstance(r, FiniteMeasure) else FiniteMeasure(r) for s, r in rows.items()}

        def row_fn(state):
            try:
                return table[state]
            except KeyError:
                raise KernelError(f"state {state!r} is not in the kernel's state set") from None

        return cls(row_fn, states=table.keys(), name=name)

    def row(self, state: Hashable) -> FiniteMeasure:
        try:
            return self._rows[state]
        except KeyError:
            r = self._row_fn(state)
            self._rows[state] = r
            return r

    def __call__(self, state: Hashable, event) -> Real:
        """``kappa(state, A)`` where ``A`` is a predicate or a collection of states."""
        r = self.row(state)
        if callable(event):
            return r.event(event)
        targets = set(event)
        return r.event(lambda s: s in targets)

    @property
    def stochastic(self) -> bool:
        if self.states is not None:
            return all(self.row(s).total == 1 for s in self.states)
        if self._declared_stochastic is None:
            raise KernelError("stochasticity of a kernel on an unbounded state set must be declared")
        return self._declared_stochastic

    @property
    def substochastic(self) -> bool:
        if self.states is not None:
            return all(self.row(s).total <= 1 for s in self.states)
        return bool(self._declared_stochastic)

    def __repr__(self):
        label = self.name or ("identity" if self.is_identity else "discrete")
        return f"DiscreteKernel({label})"


@dataclass(frozen=True)
class GaussianKernel:
    """``kappa_t(x, .) = N(x, t)``, i.e. a point mass at ``x`` convolved with N(0, t)."""

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise KernelError("Gaussian kernel variance must be positive")

    def cdf(self, x: float, a: float) -> float:
        return float(ndtr((a - x) / math.sqrt(self.variance)))

    def __call__(self, x: float, event: IntervalIndicator) -> float:
        return self.integral(x, event)

    def integral(self, x: float, f) -> float:
        if isinstance(f, Polynomial):
            if f.degree > 8:
                raise UnsupportedProbe("Gaussian integrals support polynomials up to degree 8")
            return math.fsum(float(c) * _gaussian_moment(x, self.variance, k) for k, c in enumerate(f.coeffs) if c)
        if isinstance(f, IntervalIndicator):
            sd = math.sqrt(self.variance)
            return float(ndtr((f.hi - x) / sd) - ndtr((f.lo - x) / sd))
        raise UnsupportedProbe(f"no closed form for {f!r} under a Gaussian kernel")


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _gaussian_moment(mean: float, var: float, k: int) -> float:
    """E[(mean + sqrt(var) Z)^k] by binomial expansion."""
    total = 0.0
    for j in range(0, k + 1, 2):
        total += math.comb(k, j) * mean ** (k - j) * var ** (j // 2) * _double_factorial(j - 1)
    return total


def identity_kernel() -> DiscreteKernel:
    return DiscreteKernel(FiniteMeasure.point, stochastic=True, is_identity=True, name="identity")


def convolution_kernel(dist: FiniteMeasure, name: str = "") -> DiscreteKernel:
    """``kappa(w, .) = delta_w * dist`` on the integers (a shifted copy of ``dist``)."""
    dist = dist.drop_null()

    def row_fn(state):
        return FiniteMeasure({state + x: w for x, w in dist.items()})

    return DiscreteKernel(row_fn, stochastic=dist.total == 1, name=name or "convolution")


def random_walk_kernel(p: Real) -> DiscreteKernel:
    """Step +1 with probability ``p`` and -1 with probability ``1 - p``."""
    if not 0 <= p <= 1:
        raise KernelError("p must lie in [0, 1]")
    if isinstance(p, float):
        steps = {1: p, -1: 1.0 - p}
    else:
        p = Fraction(p)
        steps = {1: p, -1: 1 - p}
    return convolution_kernel(FiniteMeasure(steps), name=f"rw({p})")


def kernel_integral(kappa, omega, f) -> Real:
    """``integral f(w') kappa(omega, dw')``."""
    if isinstance(kappa, GaussianKernel):
        return kappa.integral(omega, f)
    return kappa.row(omega).integral(f)


def _check_compatible(k1: DiscreteKernel, k2: DiscreteKernel, probe_states=None) -> None:
    if k1.states is None or k2.states is None:
        return
    for s in probe_states if probe_states is not None else k1.states:
        missing = [t for t in k1.row(s).support() if t not in k2.states]
        if missing:
            raise IncompatibleKernels(f"k1 reaches {missing[0]!r}, which k2 does not accept")


def compose(k1, k2):
    """``(k1 o k2)(w, A) = integral k2(w1, A) k1(w, dw1)``."""
    if isinstance(k1, DiscreteKernel) and k1.is_identity:
        return k2
    if isinstance(k2, DiscreteKernel) and k2.is_identity:
        return k1
    if isinstance(k1, GaussianKernel) and isinstance(k2, GaussianKernel):
        return GaussianKernel(k1.variance + k2.variance)
    if isinstance(k1, DiscreteKernel) and isinstance(k2, DiscreteKernel):
        _check_compatible(k1, k2)

        def row_fn(state):
            acc: dict = {}
            for mid, w in k1.row(state).items():
                if w == 0:
                    continue
                for tgt, v in k2.row(mid).items():
                    if v:
                        acc[tgt] = acc.get(tgt, 0) + w * v
            return FiniteMeasure(acc)

        stochastic = None
        if k1.states is None:
            stochastic = _declared(k1) and _declared(k2)
        return DiscreteKernel(row_fn, states=k1.states, stochastic=stochastic, name=f"({k1.name} o {k2.name})")
    raise IncompatibleKernels(f"cannot compose {type(k1).__name__} with {type(k2).__name__}")


def _declared(k: DiscreteKernel) -> bool | None:
    try:
        return k.stochastic
    except KernelError:
        return None


def _require_finite_mass(row: FiniteMeasure, label: str) -> None:
    total = row.total
    if isinstance(total, float) and not math.isfinite(total):
        raise KernelError(f"{label}: row mass is not finite")
    if total > 1:
        raise KernelError(f"{label}: row mass {total} exceeds 1; products need substochastic kernels")


def product_pair(k1: DiscreteKernel, k2: DiscreteKernel, mode: str = "P") -> DiscreteKernel:
    """Binary kernel product onto pair states ``(w1, w2)``.

    ``mode="K"``: ``k2`` reads the pair ``(w0, w1)``.  ``mode="P"``: ``k2``
    reads only ``w1``.
    """
    mode = mode.upper().lstrip("⊗_")
    if mode not in ("K", "P"):
        raise ValueError("mode must be 'K' or 'P'")

    def row_fn(w0):
        first = k1.row(w0)
        _require_finite_mass(first, "k1")
        acc: dict = {}
        for w1, a in first.items():
            if a == 0:
                continue
            second = k2.row((w0, w1) if mode == "K" else w1)
            _require_finite_mass(second, "k2")
            for w2, b in second.items():
                if b:
                    acc[(w1, w2)] = acc.get((w1, w2), 0) + a * b
        return FiniteMeasure(acc)

    stochastic = None
    if k1.states is None:
        stochastic = _declared(k1) and _declared(k2)
    return DiscreteKernel(row_fn, states=k1.states, stochastic=stochastic, name=f"({k1.name} x{mode} {k2.name})")


@dataclass(frozen=True)
class ProductLawTable:
    """Law of the state tuple ``(x_0, ..., x_n)`` started from ``start``."""

    start: Hashable
    entries: Mapping[tuple, Real]

    @property
    def total(self) -> Real:
        vals = list(self.entries.values())
        return sum(vals, Fraction(0)) if all(isinstance(v, (int, Fraction)) for v in vals) else math.fsum(vals)

    def as_measure(self) -> FiniteMeasure:
        return FiniteMeasure(self.entries)

    def marginal(self, i: int) -> FiniteMeasure:
        return self.as_measure().pushforward(lambda path: path[i])

    def __getitem__(self, path: tuple) -> Real:
        return self.entries.get(tuple(path), Fraction(0))


def _family_kernels(family) -> list:
    if isinstance(family, KernelFamily):
        idx = list(family.index)
        if idx != list(range(len(idx))):
            raise KernelError("product_finite needs a family indexed by 0..n")
        return [family.resolve(i) for i in idx]
    return list(family)


def product_finite(family, start: Hashable = 0, max_entries: int = MAX_TABLE_ENTRIES) -> ProductLawTable:
    """Finite kernel product at ``start``, built by recursion over the family.

    The base case lifts ``K_0(start, .)`` to one-element tuples; each step
    extends every tuple by integrating against the next kernel from the
    tuple's last state.
    """
    kernels = _family_kernels(family)
    if not kernels:
        raise KernelError("empty kernel family")
    if any(isinstance(k, GaussianKernel) for k in kernels):
        raise KernelError("product_finite tabulates discrete kernels only")
    base = kernels[0].row(start)
    _require_finite_mass(base, "K_0")
    table = {(x,): w for x, w in base.items() if w}
    for step, kernel in enumerate(kernels[1:], start=1):
        nxt: dict = {}
        for path, w in table.items():
            row = kernel.row(path[-1])
            _require_finite_mass(row, f"K_{step}")
            for x, v in row.items():
                if v:
                    nxt[path + (x,)] = w * v
            if len(nxt) > max_entries:
                raise TableTooLarge(f"product table exceeds {max_entries} entries at step {step}")
        table = nxt
    return ProductLawTable(start, table)


@dataclass(frozen=True)
class ConvolutionCheck:
    equal: bool
    discrepancy: Real


def convolution_family_check(dists: Sequence[FiniteMeasure], start: int = 0, max_entries: int = MAX_TABLE_ENTRIES) -> ConvolutionCheck:
    """Compare the product of the kernels ``delta_w * dist_i`` at ``start`` with
    the law of the partial sums of independent draws from the ``dists``."""
    if not dists:
        raise KernelError("need at least one distribution")
    for d in dists:
        if not d.is_probability():
            raise KernelError("each distribution must be a probability measure")
    kernels = [convolution_kernel(d) for d in dists]
    table = product_finite(kernels, start=start, max_entries=max_entries)

    size = math.prod(len(d.support()) for d in dists)
    if size > max_entries:
        raise TableTooLarge(f"independent product has {size} entries")
    direct: dict = {}
    supports = [[(x, d.weight(x)) for x in d.support()] for d in dists]
    for combo in itertools.product(*supports):
        w = math.prod((c[1] for c in combo), start=Fraction(1))
        sums = tuple(itertools.accumulate((c[0] for c in combo), initial=start))[1:]
        direct[sums] = direct.get(sums, 0) + w
    disc = table.as_measure().max_abs_difference(FiniteMeasure(direct))
    return ConvolutionCheck(disc == 0, disc)


def semidirect_product(mu: FiniteMeasure, kappa: DiscreteKernel) -> FiniteMeasure:
    """The joint law ``(mu x_S kappa)({(w1, w2)}) = mu(w1) kappa(w1, {w2})``."""
    acc: dict = {}
    for w1, a in mu.items():
        if a == 0:
            continue
        row = kappa.row(w1)
        _require_finite_mass(row, "kappa")
        for w2, b in row.items():
            if b:
                acc[(w1, w2)] = a * b
    return FiniteMeasure(acc)


# -- families and the semigroup / consistency laws ------------------------------


@dataclass(frozen=True)
class KernelFamily:
    """Kernels indexed by sorted nonnegative reals."""

    kernels: Mapping[Real, object]

    def __post_init__(self):
        if not self.kernels:
            raise KernelError("a kernel family needs at least one member")
        if any(i < 0 for i in self.kernels):
            raise KernelError("family indices must be nonnegative")
        object.__setattr__(self, "kernels", dict(sorted(self.kernels.items())))

    @property
    def index(self) -> tuple:
        return tuple(self.kernels)

    def resolve(self, i: Real):
        try:
            return self.kernels[i]
        except KeyError:
            raise MissingIndex(f"index {i!r} is not in the family") from None


def gaussian_semigroup(index: Iterable[float]) -> KernelFamily:
    """``t -> N(., t)`` with the identity at ``t = 0``."""
    return KernelFamily({t: identity_kernel() if t == 0 else GaussianKernel(t) for t in index})


def _binomial_row(p: Fraction, n: int) -> Callable[[int], FiniteMeasure]:
    def row_fn(state):
        return FiniteMeasure(
            {state + 2 * k - n: math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1) if p**k * (1 - p) ** (n - k)}
        )

    return row_fn


def binomial_family(p: Real, n_max: int) -> KernelFamily:
    """``n -> n-step random-walk kernel`` from the closed-form binomial rows."""
    if not 0 <= p <= 1:
        raise KernelError("p must lie in [0, 1]")
    p = Fraction(p)
    fam = {0: identity_kernel()}
    for n in range(1, n_max + 1):
        fam[n] = DiscreteKernel(_binomial_row(p, n), stochastic=True, name=f"binom({n})")
    return KernelFamily(fam)


def kernel_discrepancy(a, b, states: Iterable = (0,), probes: Sequence | None = None) -> Real:
    """Largest difference between two kernels at ``states``.

    Discrete pairs without probes compare rows singleton by singleton.
    Otherwise each probe is integrated under both kernels.
    """
    worst: Real = Fraction(0)
    both_discrete = isinstance(a, DiscreteKernel) and isinstance(b, DiscreteKernel)
    if probes is None:
        if not both_discrete:
            probes = DEFAULT_PROBES
    for s in states:
        if probes is None:
            d = a.row(s).max_abs_difference(b.row(s))
            worst = max(worst, d)
        else:
            for f in probes:
                d = abs(kernel_integral(a, s, f) - kernel_integral(b, s, f))
                worst = max(worst, d)
    return worst


@dataclass(frozen=True)
class SemigroupCheck:
    s: Real
    t: Real
    discrepancy: Real
    identity_ok: bool
    identity_discrepancy: Real
    tolerance: float
    passed: bool


def _is_exact_family(*kernels) -> bool:
    return all(isinstance(k, DiscreteKernel) for k in kernels)


def check_semigroup(family: KernelFamily, s: Real, t: Real, probes: Sequence | None = None, states: Iterable = (0,)) -> SemigroupCheck:
    """Measure how far ``kappa_s o kappa_t`` is from ``kappa_{s+t}``.

    Also checks that ``kappa_0`` is the identity; a non-identity ``kappa_0``
    shows up as ``identity_ok=False`` rather than as an exception.
    """
    states = tuple(states)
    ks, kt, kst = family.resolve(s), family.resolve(t), family.resolve(s + t)
    k0 = family.resolve(0)
    ident = identity_kernel()
    identity_disc = kernel_discrepancy(k0, ident, states, probes if not _is_exact_family(k0) else None)
    exact = _is_exact_family(ks, kt, kst, k0)
    tol = 0.0 if exact else GAUSSIAN_TOL
    disc = kernel_discrepancy(compose(ks, kt), kst, states, probes)
    identity_ok = identity_disc <= tol
    return SemigroupCheck(s, t, disc, identity_ok, identity_disc, tol, identity_ok and disc <= tol)


@dataclass(frozen=True)
class ConsistentFamily:
    """Kernels indexed by ordered pairs ``(i, j)`` with ``i <= j``."""

    kernels: Mapping[tuple, object]

    def __post_init__(self):
        object.__setattr__(self, "kernels", dict(self.kernels))

    @property
    def index(self) -> tuple:
        return tuple(sorted({i for pair in self.kernels for i in pair}))

    def resolve(self, i, j):
        try:
            return self.kernels[(i, j)]
        except KeyError:
            raise MissingIndex(f"pair {(i, j)!r} is not in the family") from None

    @classmethod
    def from_semigroup(cls, family: KernelFamily) -> "ConsistentFamily":
        """``kappa_{s,t} = kappa_{t-s}`` for every resolvable pair."""
        out = {}
        for s in family.index:
            for t in family.index:
                if t >= s and (t - s) in family.kernels:
                    out[(s, t)] = family.resolve(t - s)
        return cls(out)


@dataclass(frozen=True)
class ConsistencyVerdict:
    passed: bool
    max_discrepancy: Real
    failures: tuple
    triples_checked: int
    note: str = ""


def check_consistent(
    family: ConsistentFamily,
    triples: Iterable[tuple] | None = None,
    probes: Sequence | None = None,
    states: Iterable = (0,),
) -> ConsistencyVerdict:
    """Check ``kappa_{i,j} o kappa_{j,k} = kappa_{i,k}`` on triples ``i < j < k``.

    Without explicit ``triples`` every triple whose three kernels are present
    is checked.  Explicit triples with a missing kernel raise ``MissingIndex``.
    """
    states = tuple(states)
    if triples is None:
        idx = family.index
        triples = [
            (i, j, k)
            for i, j, k in itertools.combinations(idx, 3)
            if (i, j) in family.kernels and (j, k) in family.kernels and (i, k) in family.kernels
        ]
    else:
        triples = list(triples)
    if not triples:
        return ConsistencyVerdict(True, Fraction(0), (), 0, note="no triples")
    worst: Real = Fraction(0)
    failures = []
    for i, j, k in triples:
        kij, kjk, kik = family.resolve(i, j), family.resolve(j, k), family.resolve(i, k)
        tol = 0.0 if _is_exact_family(kij, kjk, kik) else GAUSSIAN_TOL
        d = kernel_discrepancy(compose(kij, kjk), kik, states, probes)
        worst = max(worst, d)
        if d > tol:
            failures.append((i, j, k))
    return ConsistencyVerdict(not failures, worst, tuple(failures), len(triples))


# -- text format -----------------------------------------------------------------


def _render_weight(w: Real) -> str:
    f = Fraction(w)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_kernel(kernel: DiscreteKernel) -> str:
    """One line per state: ``state -> state:prob, state:prob``."""
    if kernel.states is None:
        raise KernelError("only kernels with a finite state set can be written out")
    lines = []
    for s in sorted(kernel.states):
        row = kernel.row(s)
        body = ", ".join(f"{t}:{_render_weight(w)}" for t, w in sorted(row.items()) if w != 0)
        lines.append(f"{s} -> {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_kernel(text: str) -> DiscreteKernel:
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise KernelError(f"line {lineno}: expected 'state -> state:prob, ...'")
        lhs, rhs = line.split("->", 1)
        src = int(lhs.strip())
        if src in rows:
            raise KernelError(f"line {lineno}: duplicate row for state {src}")
        atoms = {}
        for item in filter(None, (x.strip() for x in rhs.split(","))):
            tgt, _, prob = item.partition(":")
            if not prob:
                raise KernelError(f"line {lineno}: entry {item!r} lacks ':prob'")
            atoms[int(tgt)] = Fraction(prob.strip())
        rows[src] = FiniteMeasure(atoms)
    return DiscreteKernel.from_rows(rows)
