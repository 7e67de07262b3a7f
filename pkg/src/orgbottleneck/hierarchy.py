"""Multi-level organizations as chains of attention-limited compression stages.

A hierarchy is an ordered list of layers. An external signal enters at
layer 1, and each layer re-encodes its input through a bottleneck solve
whose trade-off multiplier is the total attention available at the
consuming layer: generous downstream attention means weak compression
pressure. Relevance is always measured against the global decision
variable Y carried alongside the signal.

Skip edges transmit an earlier layer's representation past intermediate
layers. A skip (a -> b) replaces layer b's input with the exact joint of
(L_a, L_{b-1}) on the product alphabet; nothing is approximated, because
every layer's encoder and wiring are recorded in an ``EncoderChain`` from
which the joint of any subset of layer variables can be reconstructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bottleneck import SolverConfig, solve_ib
from .exceptions import ConsistencyError, DimensionError, ValidationError
from .info_theory import (
    Channel,
    JointDistribution,
    as_joint,
    entropy,
    mutual_information,
    push_through,
)

# Variable index of the external source signal in an EncoderChain.
SOURCE_VAR = 0


@dataclass(frozen=True)
class LayerSpec:
    """One hierarchy level: its agents' attention budgets and representation size.

    ``max_rate_bits`` optionally post-checks the achieved I(X; L_i) against a
    hard capacity; it never alters the optimization. ``beta_override``
    replaces the attention-derived multiplier for this layer's solve.
    """

    name: str
    attentions: tuple[float, ...]
    cardinality: int
    max_rate_bits: float | None = None
    beta_override: float | None = None

    def __post_init__(self):
        attentions = tuple(float(a) for a in self.attentions)
        if not attentions:
            raise ValidationError(f"layer {self.name!r} needs at least one attention entry")
        for i, a in enumerate(attentions):
            if not a > 0:
                raise ValidationError(
                    f"layer {self.name!r} attentions[{i}] must be > 0, got {a}"
                )
        object.__setattr__(self, "attentions", attentions)
        if self.cardinality < 1:
            raise ValidationError(
                f"layer {self.name!r} cardinality must be >= 1, got {self.cardinality}"
            )
        if self.max_rate_bits is not None and self.max_rate_bits < 0:
            raise ValidationError(
                f"layer {self.name!r} max_rate_bits must be >= 0, got {self.max_rate_bits}"
            )
        if self.beta_override is not None and self.beta_override < 0:
            raise ValidationError(
                f"layer {self.name!r} beta_override must be >= 0, got {self.beta_override}"
            )


@dataclass(frozen=True)
class SkipEdge:
    """An edge carrying layer ``from_layer``'s representation to ``to_layer``.

    Adjacent links are the default reporting lines, so a skip must span at
    least one intermediate layer.
    """

    from_layer: int
    to_layer: int

    def __post_init__(self):
        if self.from_layer < 1:
            raise ValidationError(f"skip from_layer must be >= 1, got {self.from_layer}")
        if self.to_layer < self.from_layer + 2:
            raise ValidationError(
                f"skip ({self.from_layer} -> {self.to_layer}) must span at least one "
                "intermediate layer; adjacent layers are already connected"
            )


@dataclass(frozen=True)
class HierarchySpec:
    """Ordered layers (1 = operational, N = top) plus optional skip edges."""

    layers: tuple[LayerSpec, ...]
    skips: tuple[SkipEdge, ...] = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("a hierarchy needs at least one layer")
        object.__setattr__(self, "layers", layers)
        skips = tuple(self.skips)
        n = len(layers)
        seen = set()
        for edge in skips:
            if edge.to_layer > n:
                raise ValidationError(
                    f"skip ({edge.from_layer} -> {edge.to_layer}) exceeds the "
                    f"{n}-layer hierarchy"
                )
            key = (edge.from_layer, edge.to_layer)
            if key in seen:
                raise ValidationError(f"duplicate skip edge {key}")
            seen.add(key)
        object.__setattr__(
            self, "skips", tuple(sorted(skips, key=lambda e: (e.to_layer, e.from_layer)))
        )

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True, eq=False)
class LayerState:
    """Solved state of one layer after propagation."""

    index: int
    name: str
    representation_joint: JointDistribution
    encoder: Channel
    i_x_l: float
    i_y_l: float
    h_l: float
    beta_effective: float
    converged: bool
    rate_limit_exceeded: bool | None = None


@dataclass(frozen=True)
class ChainLink:
    """One recorded stage: which variables it read and the encoder it applied.

    ``inputs`` are variable indices (0 is the source signal, i >= 1 is layer
    i's representation); the encoder's input alphabet is the row-major
    product of the input alphabets.
    """

    inputs: tuple[int, ...]
    encoder: Channel


@dataclass(frozen=True, eq=False)
class EncoderChain:
    """Recorded wiring of a propagation, sufficient to reconstruct exact joints."""

    source: JointDistribution
    links: tuple[ChainLink, ...]

    def __post_init__(self):
        object.__setattr__(self, "source", as_joint(self.source))
        links = tuple(self.links)
        for i, link in enumerate(links, start=1):
            if not link.inputs:
                raise ValidationError(f"chain link {i} has no inputs")
            if any(v < 0 or v >= i for v in link.inputs):
                raise ValidationError(
                    f"chain link {i} may only read the source or layers below it, "
                    f"got inputs {link.inputs}"
                )
            expected = 1
            for v in link.inputs:
                expected *= self._var_size(v, links)
            if link.encoder.in_size != expected:
                raise DimensionError(
                    f"chain link {i} encoder expects input alphabet "
                    f"{link.encoder.in_size}, product of its inputs is {expected}"
                )
        object.__setattr__(self, "links", links)

    def _var_size(self, var: int, links=None) -> int:
        if var == SOURCE_VAR:
            return self.source.x_size
        links = self.links if links is None else links
        return links[var - 1].encoder.out_size

    def alphabet_size(self, var: int) -> int:
        """Alphabet size of a variable (0 = source, i = layer i)."""
        if var < 0 or var > len(self.links):
            raise ValidationError(f"variable index {var} out of range")
        return self._var_size(var)

    def conditional_given_source(self, targets) -> np.ndarray:
        """Exact p(targets | x) as an array of shape (|X|, prod of target sizes).

        Columns are row-major over the target variables in the given order.
        Computed by a forward pass over the recorded links, keeping only the
        variables still needed downstream.
        """
        targets = tuple(int(t) for t in targets)
        if not targets:
            raise ValidationError("at least one target variable is required")
        if len(set(targets)) != len(targets):
            raise ValidationError("target variables must be distinct")
        for t in targets:
            if t < 0 or t > len(self.links):
                raise ValidationError(f"variable index {t} out of range")
        nx = self.source.x_size
        horizon = max((t for t in targets if t >= 1), default=0)
        # needed_after[i]: variables that must survive past step i.
        live_after: dict[int, set[int]] = {}
        for i in range(horizon + 1):
            needed = {t for t in targets}
            for j in range(i + 1, horizon + 1):
                needed.update(self.links[j - 1].inputs)
            live_after[i] = {v for v in needed if v <= i}
        # Frontier tensor: axis 0 is the conditioning x, remaining axes are
        # the live variables; starts as p(x'|x) = identity.
        frontier_vars = [SOURCE_VAR]
        tensor = np.eye(nx).reshape(nx, nx)
        tensor = self._drop_dead(tensor, frontier_vars, live_after[0])
        for i in range(1, horizon + 1):
            link = self.links[i - 1]
            in_sizes = [self._var_size(v) for v in link.inputs]
            enc = link.encoder.probs.reshape(*in_sizes, link.encoder.out_size)
            # Subscript labels: 0 for x, var+1 for each variable, a fresh
            # label for the new layer output.
            t_labels = [0] + [v + 1 for v in frontier_vars]
            e_labels = [v + 1 for v in link.inputs] + [i + 1]
            out_labels = t_labels + [i + 1]
            tensor = np.einsum(tensor, t_labels, enc, e_labels, out_labels)
            frontier_vars = frontier_vars + [i]
            tensor = self._drop_dead(tensor, frontier_vars, live_after[i])
        order = [0] + [1 + frontier_vars.index(t) for t in targets]
        tensor = np.transpose(tensor, order)
        return np.ascontiguousarray(tensor.reshape(nx, -1))

    @staticmethod
    def _drop_dead(tensor, frontier_vars, live):
        dead_axes = [
            1 + k for k, v in enumerate(frontier_vars) if v not in live
        ]
        if dead_axes:
            tensor = tensor.sum(axis=tuple(dead_axes))
            frontier_vars[:] = [v for v in frontier_vars if v in live]
        return tensor

    def joint_with_relevance(self, targets) -> JointDistribution:
        """Exact joint of the target product variable with Y.

        p(u, y) = sum_x p(x, y) p(u | x), where u ranges over the row-major
        product alphabet of the targets.
        """
        cond = self.conditional_given_source(targets)
        return JointDistribution(cond.T @ self.source.probs)


@dataclass(frozen=True, eq=False)
class PropagationReport:
    """All layer states of one propagation plus the recorded wiring."""

    states: tuple[LayerState, ...]
    source_mi: float
    topology: HierarchySpec
    history: EncoderChain


def build_hierarchy(spec) -> HierarchySpec:
    """Validate a hierarchy spec (layers indexed 1..N, skips in range).

    Accepts an existing ``HierarchySpec`` or a (layers, skips) pair of
    sequences; all invariants are re-checked either way.
    """
    if isinstance(spec, HierarchySpec):
        return HierarchySpec(spec.layers, spec.skips)
    layers, skips = spec
    return HierarchySpec(tuple(layers), tuple(skips))


def layer_beta(spec: HierarchySpec, i: int) -> float:
    """Attention-derived trade-off multiplier for layer i's solve.

    Below the top this is the total attention of the consuming layer i+1;
    the top layer uses its own decision-makers' total attention.
    """
    spec = build_hierarchy(spec)
    n = spec.n_layers
    if i < 1 or i > n:
        raise ValidationError(f"layer index {i} out of range 1..{n}")
    consumer = spec.layers[i] if i < n else spec.layers[n - 1]
    return float(sum(consumer.attentions))


def _effective_beta(spec: HierarchySpec, i: int) -> float:
    override = spec.layers[i - 1].beta_override
    return float(override) if override is not None else layer_beta(spec, i)


def _skips_into(spec: HierarchySpec) -> dict[int, list[int]]:
    incoming: dict[int, list[int]] = {}
    for edge in spec.skips:
        incoming.setdefault(edge.to_layer, []).append(edge.from_layer)
    for sources in incoming.values():
        sources.sort()
    return incoming


def _layer_input_vars(spec: HierarchySpec, i: int, incoming) -> tuple[int, ...]:
    if i == 1:
        return (SOURCE_VAR,)
    return tuple(incoming.get(i, [])) + (i - 1,)


def _extend_warm_encoder(warm: np.ndarray, input_sizes) -> np.ndarray:
    """Broadcast a chain-input encoder over extra skip coordinates.

    The chain predecessor is the last (fastest-varying) coordinate of the
    row-major product alphabet, so tiling the rows reproduces the original
    behavior while ignoring every skip coordinate.
    """
    repeats = int(np.prod(input_sizes[:-1])) if len(input_sizes) > 1 else 1
    return np.tile(warm, (repeats, 1))


def propagate(
    spec,
    source,
    solver_cfg: SolverConfig,
    *,
    warm_encoders=None,
) -> PropagationReport:
    """Push a source signal through every layer's bottleneck solve.

    Layer 1 compresses the external signal; each later layer compresses its
    predecessor's representation, widened to an exact product alphabet when
    skip edges terminate there. Solver non-convergence is reported per layer
    via the state's ``converged`` flag, never raised. ``warm_encoders``
    optionally supplies one encoder per layer (from a comparable previous
    run) used as additional warm-start candidates after widening.
    Deterministic given ``solver_cfg.rng_seed``.
    """
    spec = build_hierarchy(spec)
    source = as_joint(source)
    if warm_encoders is not None and len(warm_encoders) != spec.n_layers:
        raise ValidationError(
            f"expected {spec.n_layers} warm encoders, got {len(warm_encoders)}"
        )
    source_mi = mutual_information(source)
    incoming = _skips_into(spec)
    links: list[ChainLink] = []
    states: list[LayerState] = []
    px = source.marginal_x().probs
    for i in range(1, spec.n_layers + 1):
        layer = spec.layers[i - 1]
        input_vars = _layer_input_vars(spec, i, incoming)
        chain = EncoderChain(source, tuple(links))
        input_joint = chain.joint_with_relevance(input_vars)
        beta = _effective_beta(spec, i)
        cfg = SolverConfig(
            beta=beta,
            bottleneck_cardinality=layer.cardinality,
            max_iterations=solver_cfg.max_iterations,
            convergence_tol=solver_cfg.convergence_tol,
            restarts=solver_cfg.restarts,
            rng_seed=solver_cfg.rng_seed,
            anneal=solver_cfg.anneal,
        )
        init = None
        if warm_encoders is not None:
            warm = np.asarray(warm_encoders[i - 1], dtype=float)
            sizes = [chain.alphabet_size(v) for v in input_vars]
            if warm.shape == (sizes[-1], layer.cardinality):
                init = _extend_warm_encoder(warm, sizes)
            elif warm.shape == (input_joint.x_size, layer.cardinality):
                init = warm
            else:
                raise DimensionError(
                    f"warm encoder for layer {i} has shape {warm.shape}, expected "
                    f"({sizes[-1]}, {layer.cardinality}) before widening"
                )
        solution = solve_ib(input_joint, cfg, init_encoder=init)
        links.append(ChainLink(input_vars, solution.encoder))
        chain = EncoderChain(source, tuple(links))
        rep_joint = push_through(input_joint, solution.encoder)
        cond = chain.conditional_given_source((i,))
        i_x = mutual_information(JointDistribution(px[:, None] * cond))
        i_y = mutual_information(rep_joint)
        h_l = entropy(rep_joint.marginal_x())
        rate_flag = None
        if layer.max_rate_bits is not None:
            rate_flag = bool(i_x > layer.max_rate_bits + 1e-9)
        states.append(
            LayerState(
                index=i,
                name=layer.name,
                representation_joint=rep_joint,
                encoder=solution.encoder,
                i_x_l=i_x,
                i_y_l=i_y,
                h_l=h_l,
                beta_effective=beta,
                converged=solution.converged,
                rate_limit_exceeded=rate_flag,
            )
        )
    return PropagationReport(
        states=tuple(states),
        source_mi=source_mi,
        topology=spec,
        history=EncoderChain(source, tuple(links)),
    )


def merge_skip(
    earlier: LayerState,
    current: LayerState,
    source,
    history: EncoderChain,
) -> JointDistribution:
    """Exact joint of (L_earlier x L_current) with Y from a recorded chain.

    Both states must come from the propagation that produced ``history``;
    the joint is reconstructed by composing the recorded encoders from the
    shared source, never by assuming the two representations conditionally
    independent.
    """
    source = as_joint(source)
    if history.source != source:
        raise ConsistencyError("history was recorded for a different source joint")
    for state in (earlier, current):
        if state.index < 1 or state.index > len(history.links):
            raise ConsistencyError(
                f"layer index {state.index} is not part of the recorded chain"
            )
        if history.links[state.index - 1].encoder != state.encoder:
            raise ConsistencyError(
                f"layer {state.index}'s encoder does not match the recorded chain; "
                "states and history come from different propagations"
            )
    if earlier.index == current.index:
        # Degenerate self-merge: duplicate the coordinate explicitly.
        cond = history.conditional_given_source((earlier.index,))
        size = cond.shape[1]
        dup = np.zeros((cond.shape[0], size * size))
        dup[:, np.arange(size) * size + np.arange(size)] = cond
        return JointDistribution(dup.T @ source.probs)
    return history.joint_with_relevance((earlier.index, current.index))


def relevant_info_profile(report: PropagationReport):
    """Per-layer (index, I(X;L), I(Y;L), H(L), beta) rows, in layer order."""
    return [
        (s.index, s.i_x_l, s.i_y_l, s.h_l, s.beta_effective) for s in report.states
    ]
