"""Global interface problem (I - S) g = b over directed Robin traces.

The unknown g is one complex vector blocked by the pair ordinal m: block
m(j, i), of length n, holds the Robin datum incoming to subdomain j across
the interface with i.  Applying S costs one local solve per subdomain: solve
with all incoming blocks of that subdomain at once, then scatter the outgoing
trace toward each neighbor into its block.  Row block m(j, i) therefore only
couples to column blocks m(i, k), k in D_i, i.e. adjacent diagonal groups.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .discretization import (
    ImpedanceSpec,
    LocalOperator,
    ProblemSpec,
    extract_outgoing_trace,
    solve_local,
    solve_lifting,
)
from .indexing import MultiIndex, Partition

DENSE_GUARD = 6000


class TraceLayout:
    """Block layout of interface vectors: 2*N_e blocks of length n, in m-order."""

    def __init__(self, partition: Partition, n: int):
        self.partition = partition
        self.n = n
        self.size = len(partition.pairs) * n

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size, dtype=complex)

    def block(self, m: int) -> slice:
        """Slice of the block with ordinal m (1-based)."""
        return slice((m - 1) * self.n, m * self.n)

    def block_of(self, owner: MultiIndex, neighbor: MultiIndex) -> slice:
        return self.block(self.partition.m_index((owner, neighbor)))

    def group_indices(self, groups) -> np.ndarray:
        """Vector indices of all blocks owned by subdomains in the given groups."""
        picks = []
        for m, pair in enumerate(self.partition.pairs, start=1):
            if pair.owner.group in groups:
                picks.append(np.arange((m - 1) * self.n, m * self.n))
        if not picks:
            return np.empty(0, dtype=np.intp)
        return np.concatenate(picks)

    def check(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g)
        if g.shape != (self.size,):
            raise ValueError(f"interface vector has length {g.size}, expected {self.size}")
        return g.astype(complex, copy=False)


class InterfaceSystem:
    """Subdomain operators plus the matrix-free scattering operator S.

    All subdomain solves inside one application are independent (each output
    block is written by exactly one subdomain), so any worker count yields
    bitwise identical results.
    """

    def __init__(
        self,
        spec: ProblemSpec,
        partition: Partition,
        imp: ImpedanceSpec | None = None,
        workers: int = 1,
    ):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.spec = spec
        self.partition = partition
        self.imp = imp if imp is not None else ImpedanceSpec.for_problem(spec)
        self.workers = workers
        self.layout = TraceLayout(partition, spec.cells_per_side)
        self.operators: dict[MultiIndex, LocalOperator] = {
            i: LocalOperator(spec, self.imp, partition, i) for i in partition.subdomains
        }

    def _map(self, fn, items):
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def compute_liftings(self) -> dict[MultiIndex, tuple]:
        """Lifting field and outgoing lifting traces per subdomain."""
        results = self._map(
            lambda i: (i, solve_lifting(self.operators[i], self.spec)), self.partition.subdomains
        )
        return {i: lifted for i, lifted in results}

    def assemble_rhs(self, liftings: dict[MultiIndex, tuple]) -> np.ndarray:
        """Right-hand side b: block m(j, i) = outgoing lifting trace of i toward j."""
        b = self.layout.zeros()
        for i in self.partition.subdomains:
            op = self.operators[i]
            _, traces = liftings[i]
            for j in self.partition.neighbors[i]:
                b[self.layout.block_of(j, i)] = traces[op.face_toward(j)]
        return b

    def _scatter_one(self, i: MultiIndex, g: np.ndarray, targets) -> list[tuple[slice, np.ndarray]]:
        """Solve subdomain i against its incoming blocks of g; return the
        outgoing blocks toward neighbors whose group is in `targets`."""
        op = self.operators[i]
        incoming = {}
        for k in self.partition.neighbors[i]:
            incoming[op.face_toward(k)] = g[self.layout.block_of(i, k)]
        out_neighbors = [j for j in self.partition.neighbors[i] if targets is None or j.group in targets]
        if not out_neighbors:
            return []
        if all(not np.any(trace) for trace in incoming.values()):
            return []
        field = solve_local(op, incoming)
        writes = []
        for j in out_neighbors:
            face = op.face_toward(j)
            trace = extract_outgoing_trace(op, field, incoming[face], face)
            writes.append((self.layout.block_of(j, i), trace))
        return writes

    def apply_scattering(self, g: np.ndarray) -> np.ndarray:
        """S g via one local solve per subdomain."""
        g = self.layout.check(g)
        out = self.layout.zeros()
        for writes in self._map(lambda i: self._scatter_one(i, g, None), self.partition.subdomains):
            for sl, trace in writes:
                out[sl] = trace
        return out

    def apply_interface_operator(self, g: np.ndarray) -> np.ndarray:
        """(I - S) g."""
        return self.layout.check(g).copy() - self.apply_scattering(g)

    def restricted_apply(self, g: np.ndarray, source_groups, target_groups) -> np.ndarray:
        """Group-restricted block of S: V_T S_{T,Src} V_Src^T g embedded in full size.

        Reads only blocks owned by `source_groups` subdomains, solves only those
        subdomains, and writes only blocks owned by `target_groups` subdomains.
        """
        g = self.layout.check(g)
        source_groups = set(source_groups)
        target_groups = set(target_groups)
        out = self.layout.zeros()
        solves = [i for i in self.partition.subdomains if i.group in source_groups]
        for writes in self._map(lambda i: self._scatter_one(i, g, target_groups), solves):
            for sl, trace in writes:
                out[sl] = trace
        return out

    def materialize_dense(self) -> np.ndarray:
        """Dense S, column by column; verification oracle, size-guarded."""
        size = self.layout.size
        if size > DENSE_GUARD:
            raise ValueError(f"dense guard exceeded: {size} > {DENSE_GUARD}")
        dense = np.zeros((size, size), dtype=complex)
        e = self.layout.zeros()
        for k in range(size):
            e[:] = 0.0
            e[k] = 1.0
            dense[:, k] = self.apply_scattering(e)
        return dense
