"""RC-network thermal models as linear state-space systems.

State ordering is ``x = [T_z, T_w1, ..., T_wN]`` and the disturbance vector
is ``w = [T_am, Q_int, Q_solar]``. Only ``T_z`` is measured. Heat input
``u = Q_HVAC`` is positive when adding heat and negative when removing it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

PRESET_NAMES = ("R-1", "R-2", "R-4", "C-1", "C-2")


@dataclass(frozen=True)
class RcTopology:
    """Structure of an RC network: which resistors and gain paths exist.

    ``wall_wall_coupled`` lists unordered hidden-node pairs ``(i, j)``
    (0-based, ``i < j``) joined by a resistor. The zone-gain flags say
    whether the internal/solar fraction on the zone node is a free
    parameter; when False the fraction is fixed at zero.
    """

    n_hidden: int = 0
    wall_wall_coupled: tuple[tuple[int, int], ...] = ()
    gains_on_walls: bool = False
    zone_internal_gain: bool = True
    zone_solar_gain: bool = True
    preset_name: str = "custom"

    def __post_init__(self):
        if self.n_hidden < 0:
            raise ValueError("n_hidden must be >= 0")
        pairs = []
        for i, j in self.wall_wall_coupled:
            if i == j:
                raise ValueError("a wall node cannot be coupled to itself")
            if not (0 <= i < self.n_hidden and 0 <= j < self.n_hidden):
                raise ValueError(f"coupled pair {(i, j)} out of range")
            pairs.append((min(i, j), max(i, j)))
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate wall-wall coupling")
        object.__setattr__(self, "wall_wall_coupled", tuple(sorted(pairs)))

    @property
    def n_states(self) -> int:
        return self.n_hidden + 1

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric boolean matrix with False on the diagonal."""
        m = np.zeros((self.n_hidden, self.n_hidden), dtype=bool)
        for i, j in self.wall_wall_coupled:
            m[i, j] = m[j, i] = True
        return m

    def free_parameters(self) -> list[str]:
        """Names of the free parameters, in canonical order.

        Names use 1-based wall indices: ``r_zw1``, ``r_w12``, ``c_w3``...
        """
        n = self.n_hidden
        names = ["r_za"]
        names += [f"r_zw{i + 1}" for i in range(n)]
        names += [f"r_w{i + 1}{j + 1}" for i, j in self.wall_wall_coupled]
        names += [f"r_wa{i + 1}" for i in range(n)]
        names += ["c_z"] + [f"c_w{i + 1}" for i in range(n)]
        names.append("a_z")
        if self.zone_internal_gain:
            names.append("b_z")
        if self.gains_on_walls:
            names += [f"b_w{i + 1}" for i in range(n)]
        if self.zone_solar_gain:
            names.append("d_z")
        if self.gains_on_walls:
            names += [f"d_w{i + 1}" for i in range(n)]
        return names

    @property
    def n_parameters(self) -> int:
        return len(self.free_parameters())

    @classmethod
    def preset(cls, name: str) -> "RcTopology":
        try:
            kwargs = _PRESETS[name]
        except KeyError:
            raise ValueError(
                f"unknown architecture {name!r}; expected one of {PRESET_NAMES}"
            ) from None
        return cls(preset_name=name, **kwargs)


# Published counts: R-1 5, R-2 7, R-4 12, C-1 3, C-2 6 free parameters.
_PRESETS = {
    "R-1": dict(n_hidden=0, zone_internal_gain=True, zone_solar_gain=True),
    "R-2": dict(n_hidden=1, zone_internal_gain=False, zone_solar_gain=True),
    "R-4": dict(n_hidden=3, zone_internal_gain=False, zone_solar_gain=False),
    "C-1": dict(n_hidden=0, zone_internal_gain=False, zone_solar_gain=False),
    "C-2": dict(n_hidden=1, zone_internal_gain=False, zone_solar_gain=False),
}


def _vec(values, n):
    arr = np.asarray(values if values is not None else np.zeros(n), dtype=float)
    return arr.reshape(-1).copy()


@dataclass(frozen=True)
class RcParameters:
    """Physical parameters of an RC network.

    Resistances in degC/W, capacitances in J/degC, gain fractions
    dimensionless. ``r_w`` is an (N, N) symmetric matrix holding ``inf`` for
    node pairs without a resistor (zero conductance).
    """

    r_za: float
    c_z: float
    a_z: float = 1.0
    b_z: float = 0.0
    d_z: float = 0.0
    r_zw: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r_wa: np.ndarray = field(default_factory=lambda: np.zeros(0))
    c_w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b_w: np.ndarray | None = None
    d_w: np.ndarray | None = None
    r_w: np.ndarray | None = None

    def __post_init__(self):
        n = len(np.atleast_1d(self.r_zw))
        object.__setattr__(self, "r_zw", _vec(self.r_zw, n))
        object.__setattr__(self, "r_wa", _vec(self.r_wa, n))
        object.__setattr__(self, "c_w", _vec(self.c_w, n))
        object.__setattr__(self, "b_w", _vec(self.b_w, n))
        object.__setattr__(self, "d_w", _vec(self.d_w, n))
        if self.r_w is None:
            r_w = np.full((n, n), np.inf)
        else:
            r_w = np.array(self.r_w, dtype=float).reshape(n, n)
        np.fill_diagonal(r_w, np.inf)
        object.__setattr__(self, "r_w", r_w)
        for name in ("r_za", "c_z", "a_z", "b_z", "d_z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n_hidden(self) -> int:
        return len(self.r_zw)

    def validate(self, topology: RcTopology) -> None:
        """Raise ValueError if these parameters do not fit ``topology``."""
        n = topology.n_hidden
        for name in ("r_zw", "r_wa", "c_w", "b_w", "d_w"):
            if len(getattr(self, name)) != n:
                raise ValueError(
                    f"{name} has length {len(getattr(self, name))}, topology has {n} hidden nodes"
                )
        resist = [self.r_za, *self.r_zw, *self.r_wa]
        coupled = topology.coupling_matrix()
        if not np.array_equal(np.isfinite(self.r_w), coupled):
            raise ValueError("r_w finite entries must match the wall-wall couplings")
        if not np.allclose(self.r_w[coupled], self.r_w.T[coupled]):
            raise ValueError("r_w must be symmetric")
        resist += list(self.r_w[coupled])
        caps = [self.c_z, *self.c_w]
        if not all(np.isfinite(v) and v > 0 for v in resist):
            raise ValueError("resistances must be finite and strictly positive")
        if not all(np.isfinite(v) and v > 0 for v in caps):
            raise ValueError("capacitances must be finite and strictly positive")
        fracs = [self.a_z, self.b_z, self.d_z, *self.b_w, *self.d_w]
        if not all(0.0 <= v <= 1.0 for v in fracs):
            raise ValueError("gain fractions must lie in [0, 1]")
        if not topology.zone_internal_gain and self.b_z != 0.0:
            raise ValueError("topology has no internal gain on the zone; b_z must be 0")
        if not topology.zone_solar_gain and self.d_z != 0.0:
            raise ValueError("topology has no solar gain on the zone; d_z must be 0")
        if not topology.gains_on_walls and (np.any(self.b_w) or np.any(self.d_w)):
            raise ValueError("topology has no wall gains; b_w and d_w must be 0")

    def to_dict(self, topology: RcTopology) -> dict[str, float]:
        """Free parameters of ``topology`` as an ordered name->value dict."""
        out = {}
        for name in topology.free_parameters():
            out[name] = _get(self, name)
        return out

    @classmethod
    def from_dict(cls, topology: RcTopology, values: dict[str, float]) -> "RcParameters":
        """Inverse of :meth:`to_dict`; non-free fractions are set to zero."""
        n = topology.n_hidden
        missing = set(topology.free_parameters()) - set(values)
        if missing:
            raise ValueError(f"missing parameters: {sorted(missing)}")
        extra = set(values) - set(topology.free_parameters())
        if extra:
            raise ValueError(f"parameters not in topology: {sorted(extra)}")
        r_w = np.full((n, n), np.inf)
        for i, j in topology.wall_wall_coupled:
            r_w[i, j] = r_w[j, i] = values[f"r_w{i + 1}{j + 1}"]

        def wall(prefix, default=0.0):
            return np.array([values.get(f"{prefix}{i + 1}", default) for i in range(n)])

        return cls(
            r_za=values["r_za"],
            c_z=values["c_z"],
            a_z=values["a_z"],
            b_z=values.get("b_z", 0.0),
            d_z=values.get("d_z", 0.0),
            r_zw=wall("r_zw"),
            r_wa=wall("r_wa"),
            c_w=wall("c_w"),
            b_w=wall("b_w"),
            d_w=wall("d_w"),
            r_w=r_w,
        )

    def with_values(self, topology: RcTopology, **updates) -> "RcParameters":
        values = self.to_dict(topology)
        values.update(updates)
        return RcParameters.from_dict(topology, values)


def _get(params: RcParameters, name: str) -> float:
    if name in ("r_za", "c_z", "a_z", "b_z", "d_z"):
        return getattr(params, name)
    if name.startswith("r_w") and not name.startswith("r_wa"):
        i, j = int(name[3]) - 1, int(name[4]) - 1
        return float(params.r_w[i, j])
    for prefix in ("r_zw", "r_wa", "c_w", "b_w", "d_w"):
        if name.startswith(prefix):
            return float(getattr(params, prefix)[int(name[len(prefix):]) - 1])
    raise KeyError(name)


@dataclass(frozen=True)
class ContinuousStateSpace:
    a_mat: np.ndarray
    b_mat: np.ndarray
    d_mat: np.ndarray
    c_mat: np.ndarray

    @property
    def n_states(self) -> int:
        return self.a_mat.shape[0]


@dataclass(frozen=True)
class DiscreteStateSpace:
    """Forward-Euler discretization; ``stable`` is False when t_s*|a_ii| >= 1."""

    ad: np.ndarray
    bd: np.ndarray
    dd: np.ndarray
    c: np.ndarray
    t_s: float
    stable: bool = True

    @property
    def n_states(self) -> int:
        return self.ad.shape[0]


def build_state_space(topology: RcTopology, params: RcParameters) -> ContinuousStateSpace:
    """Assemble A, B, D, C of the RC network from its energy balances."""
    params.validate(topology)
    n = topology.n_hidden
    ns = n + 1
    a = np.zeros((ns, ns))
    b = np.zeros((ns, 1))
    d = np.zeros((ns, 3))

    g_zw = 1.0 / params.r_zw
    g_wa = 1.0 / params.r_wa
    g_ww = 1.0 / params.r_w  # inf -> 0
    g_za = 1.0 / params.r_za

    a[0, 0] = -(g_za + g_zw.sum()) / params.c_z
    a[0, 1:] = g_zw / params.c_z
    b[0, 0] = params.a_z / params.c_z
    d[0] = [g_za / params.c_z, params.b_z / params.c_z, params.d_z / params.c_z]
    for i in range(n):
        c_w = params.c_w[i]
        row = i + 1
        a[row, 0] = g_zw[i] / c_w
        a[row, 1:] = g_ww[i] / c_w
        a[row, row] = -(g_ww[i].sum() + g_zw[i] + g_wa[i]) / c_w
        d[row] = [g_wa[i] / c_w, params.b_w[i] / c_w, params.d_w[i] / c_w]

    c = np.zeros((1, ns))
    c[0, 0] = 1.0
    return ContinuousStateSpace(a, b, d, c)


def discretize(css: ContinuousStateSpace, t_s: float) -> DiscreteStateSpace:
    """Forward-Euler: ad = I + t_s A, bd = t_s B, dd = t_s D."""
    if not (t_s > 0 and math.isfinite(t_s)):
        raise ValueError(f"step size must be positive, got {t_s}")
    ad = np.eye(css.n_states) + t_s * css.a_mat
    stable = bool(np.all(t_s * np.abs(np.diag(css.a_mat)) < 1.0))
    return DiscreteStateSpace(
        ad=ad,
        bd=t_s * css.b_mat,
        dd=t_s * css.d_mat,
        c=css.c_mat.copy(),
        t_s=float(t_s),
        stable=stable,
    )


def model_matrices(topology: RcTopology, params: RcParameters, t_s: float) -> DiscreteStateSpace:
    return discretize(build_state_space(topology, params), t_s)


def step(dss: DiscreteStateSpace, x, u: float, w) -> tuple[np.ndarray, float]:
    """Advance one step; returns ``(x_next, y)`` with ``y`` the pre-step output."""
    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.shape != (dss.n_states,) or w.shape != (3,):
        raise ValueError(f"dimension mismatch: x {x.shape}, w {w.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w)) and math.isfinite(u)):
        raise ValueError("non-finite state or input")
    y = float(dss.c[0] @ x)
    x_next = dss.ad @ x + dss.bd[:, 0] * u + dss.dd @ w
    return x_next, y


def _check_sequences(dss, x0, u_seq, w_seq):
    u = np.ascontiguousarray(u_seq, dtype=float).reshape(-1)
    w = np.ascontiguousarray(w_seq, dtype=float)
    if w.ndim != 2 or w.shape[1] != 3:
        raise ValueError(f"disturbances must have shape (T, 3), got {w.shape}")
    if len(u) != len(w):
        raise ValueError(f"length mismatch: {len(u)} inputs vs {len(w)} disturbances")
    if len(u) < 1:
        raise ValueError("need at least one step")
    x0 = np.ascontiguousarray(x0, dtype=float).reshape(-1)
    if x0.shape != (dss.n_states,):
        raise ValueError(f"x0 has {x0.size} entries, model has {dss.n_states} states")
    return x0, u, w


def simulate(dss: DiscreteStateSpace, x0, u_seq, w_seq) -> tuple[np.ndarray, np.ndarray]:
    """Open-loop rollout.

    Returns ``(states, outputs)`` with ``states`` of shape ``(T+1, N+1)``
    (``states[0] == x0``) and ``outputs[k] = T_z(k)`` for ``k < T``.
    """
    x0, u, w = _check_sequences(dss, x0, u_seq, w_seq)
    g = _kernels.forcing(dss.bd, dss.dd, u, w)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        states = _kernels.rollout(dss.ad, g, x0)
    return states, states[:-1, 0].copy()


def equilibrium(dss: DiscreteStateSpace, u: float, w) -> np.ndarray:
    """Fixed point of the discrete map under constant inputs."""
    rhs = dss.bd[:, 0] * u + dss.dd @ np.asarray(w, dtype=float)
    return np.linalg.solve(np.eye(dss.n_states) - dss.ad, rhs)


def perturb(params: RcParameters, topology: RcTopology, factors: dict[str, float]) -> RcParameters:
    """Multiply named free parameters by factors, clipping fractions to [0, 1]."""
    values = params.to_dict(topology)
    for name, f in factors.items():
        values[name] *= f
        if name[0] in "abd":
            values[name] = min(max(values[name], 0.0), 1.0)
    return RcParameters.from_dict(topology, values)


__all__ = [
    "PRESET_NAMES",
    "RcTopology",
    "RcParameters",
    "ContinuousStateSpace",
    "DiscreteStateSpace",
    "build_state_space",
    "discretize",
    "model_matrices",
    "step",
    "simulate",
    "equilibrium",
    "perturb",
]
