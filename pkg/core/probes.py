"""
Radial Wave Lab - Run Probes
Per-step recorders filled while the characteristic integrator advances
"""

import math
from typing import Dict, List, Tuple, Any

import numpy as np
from scipy import integrate

from constants import TraceKind
from utils.data_models import (
    GridSpec, ModelParams, ProbeSet, FieldState, StepSeries, LineFluxTable, ShellSeries,
    RegionRecord, CharacteristicTrace, snap_to_lattice,
)
from utils.error_handlers import LatticeError


def _inverse_powers(r: np.ndarray, exponent: float) -> np.ndarray:
    """r^{-exponent} with the origin entry set to 0"""
    out = np.zeros_like(r)
    out[1:] = r[1:] ** (-exponent)
    return out


class _Region:
    """A lattice polygon compiled into per-step node lists"""

    def __init__(self, name: str, vertices: List[Tuple[float, float]], grid: GridSpec):
        self.name = name
        self.vertices = [(float(r), float(t)) for r, t in vertices]
        if len(vertices) < 3:
            raise LatticeError(f"region {name} needs at least three vertices", field=name)

        h = grid.dr
        nodes = []
        for r, t in vertices:
            i, n = snap_to_lattice(r, h, f"{name}.r"), snap_to_lattice(t, h, f"{name}.t")
            if not (0 <= i <= grid.n_r and 0 <= n <= grid.n_steps):
                raise LatticeError(f"region {name} vertex ({r}, {t}) outside the computed domain", field=name)
            nodes.append((i, n))

        area2 = sum(nodes[k][0] * nodes[(k + 1) % len(nodes)][1] - nodes[(k + 1) % len(nodes)][0] * nodes[k][1]
                    for k in range(len(nodes)))
        if area2 <= 0:
            raise LatticeError(f"region {name} must be counterclockwise in the (r, t) plane", field=name)

        self.edges = []
        for k in range(len(nodes)):
            (i0, n0), (i1, n1) = nodes[k], nodes[(k + 1) % len(nodes)]
            di, dn = i1 - i0, n1 - n0
            length = max(abs(di), abs(dn))
            if length == 0 or not (di == 0 or dn == 0 or abs(di) == abs(dn)):
                raise LatticeError(
                    f"region {name} edge ({i0},{n0})->({i1},{n1}) is not horizontal, vertical or characteristic",
                    field=name,
                )
            self.edges.append((i0, n0, i1, n1, int(np.sign(di)), int(np.sign(dn)), length))

        for k in range(len(self.edges)):
            a, b = self.edges[k], self.edges[(k + 1) % len(self.edges)]
            if a[4] * b[5] - a[5] * b[4] < 0:
                raise LatticeError(f"region {name} is not convex", field=name)

        self.edge_kinds = [self._edge_kind(e) for e in self.edges]
        self._compile(h)
        self.edge_inward = np.zeros(len(self.edges))
        self.edge_outward = np.zeros(len(self.edges))
        self.double_integral = 0.0

    @staticmethod
    def _edge_kind(edge) -> str:
        i0, _, i1, _, di, dn, _ = edge
        if dn == 0:
            return "horizontal"
        if di == 0:
            return "axis" if i0 == 0 and i1 == 0 else "vertical"
        return "outgoing" if di * dn > 0 else "incoming"

    def _compile(self, h: float) -> None:
        per_step: Dict[int, List[Tuple[int, float, float, bool, int]]] = {}
        for e_id, (i0, n0, _, _, di, dn, length) in enumerate(self.edges):
            axis = self.edge_kinds[e_id] == "axis"
            for k in range(length + 1):
                weight = 0.5 * h if k in (0, length) else h
                i, n = i0 + k * di, n0 + k * dn
                per_step.setdefault(n, []).append((i, weight * di, weight * dn, axis, e_id))
        self.nodes = {
            n: (np.array([e[0] for e in items]), np.array([e[1] for e in items]),
                np.array([e[2] for e in items]), np.array([e[3] for e in items]),
                np.array([e[4] for e in items]))
            for n, items in per_step.items()
        }

        rows: Dict[int, List[int]] = {}
        for (i0, n0, i1, n1, di, dn, length) in self.edges:
            for k in range(length + 1):
                rows.setdefault(n0 + k * dn, []).append(i0 + k * di)
        self.n_lo, self.n_hi = min(rows), max(rows)
        self.rows = {n: (min(v), max(v)) for n, v in rows.items()}

    def record(self, n: int, h: float, phi_sq: np.ndarray, psi_sq: np.ndarray, cv: np.ndarray,
               far: np.ndarray, density: float) -> None:
        if n in self.nodes:
            idx, coef_a, coef_b, axis, e_id = self.nodes[n]
            b_in = phi_sq[idx] - cv[idx]
            b_out = cv[idx] - psi_sq[idx]
            b_in = np.where(axis, density, b_in)
            b_out = np.where(axis, -density, b_out)
            inward = coef_a * (phi_sq[idx] + cv[idx]) + coef_b * b_in
            outward = coef_a * (psi_sq[idx] + cv[idx]) + coef_b * b_out
            np.add.at(self.edge_inward, e_id, inward)
            np.add.at(self.edge_outward, e_id, outward)

        if self.n_lo <= n <= self.n_hi:
            a, b = self.rows[n]
            if b > a:
                row = h * (far[a:b + 1].sum() - 0.5 * (far[a] + far[b]))
                weight = 0.5 * h if n in (self.n_lo, self.n_hi) or self.n_lo == self.n_hi else h
                self.double_integral += weight * row

    def result(self) -> RegionRecord:
        return RegionRecord(
            name=self.name,
            vertices=self.vertices,
            edge_inward=self.edge_inward.tolist(),
            edge_outward=self.edge_outward.tolist(),
            edge_kinds=list(self.edge_kinds),
            double_integral=float(self.double_integral),
        )


class _Trace:
    """Samples of one characteristic line"""

    def __init__(self, kind: TraceKind, index: int):
        self.kind = kind
        self.index = index
        self.rows: List[Tuple[float, ...]] = []

    def node(self, n: int) -> int:
        return n - self.index if self.kind == TraceKind.OUTGOING else self.index - n

    def result(self, h: float) -> CharacteristicTrace:
        data = np.array(self.rows, dtype=float).reshape(-1, 6)
        t, r, w, phi, psi, source = data.T
        running = integrate.cumulative_trapezoid(source, t, initial=0.0) if len(t) > 1 else np.zeros_like(t)
        return CharacteristicTrace(self.kind, self.index * h, t, r, w, phi, psi, source, running)


class RunRecorder:
    """
    Collects every per-step diagnostic of a run

    Line integrals over the full lattice characteristic families are accumulated by
    slicing: at step n the outgoing line through node i has index n - i + n_r and the
    incoming line has index n + i.
    """

    def __init__(self, grid: GridSpec, params: ModelParams, probes: ProbeSet):
        self.grid = grid
        self.params = params
        self.probes = probes
        h, n_r, n_steps = grid.dr, grid.n_r, grid.n_steps
        self.h, self.n_r, self.n_steps = h, n_r, n_steps

        r = grid.radii
        self.inv_pm1 = _inverse_powers(r, params.p - 1.0)
        self.inv_p = _inverse_powers(r, params.p)
        self.weights = np.full(n_r + 1, h)
        self.weights[[0, -1]] = 0.5 * h
        self.line_weights = self.weights.copy()
        self.edge_line_weights = np.full(n_r + 1, 0.5 * h)
        self.c = 0.0 if params.linear else params.potential_coefficient

        size = n_steps + 1
        self.series = {key: np.zeros(size) for key in
                       ('energy', 'e_minus', 'e_plus', 'potential', 'far_integral',
                        'u0_est', 'u0_richardson', 'phi0')}

        width = n_steps + n_r + 1
        self.lines = {key: np.zeros(width) for key in
                      ('out_potential', 'out_phi_sq', 'out_m', 'out_j', 'in_potential', 'in_psi_sq')}

        self.shells = {}
        for radius in probes.shell_radii:
            index = grid.node_index(radius)
            if index == 0:
                raise LatticeError("shell radius must be positive", field="shell_radii", value=radius)
            self.shells[index] = {key: np.zeros(size) for key in
                                  ('kinetic_inside', 'potential_inside', 'far_outside', 'w_at_radius',
                                   'boundary_term')}
        self.morawetz_weights = {
            index: self.weights * np.minimum(r / (index * h), 1.0) for index in self.shells
        }

        self.regions = {name: _Region(name, vertices, grid) for name, vertices in probes.regions.items()}

        self.traces: Dict[Tuple[TraceKind, int], _Trace] = {}
        for kind, labels in ((TraceKind.OUTGOING, probes.outgoing_labels),
                             (TraceKind.INCOMING, probes.incoming_labels)):
            for label in labels:
                index = snap_to_lattice(label, h, f"{kind.value}_label")
                self.traces[(kind, index)] = _Trace(kind, index)

        self.snapshot_steps = {0, n_steps}
        self.snapshot_steps.update(grid.step_index(t) for t in probes.snapshot_times)
        if probes.stride > 0:
            self.snapshot_steps.update(range(0, n_steps + 1, probes.stride))
        self.states: Dict[int, FieldState] = {}

        self.vertical_nodes = [k for k in probes.vertical_nodes if 0 < k <= n_r]
        self.verticals = {k: {key: np.zeros(size) for key in ('phi', 'psi', 'w')} for k in self.vertical_nodes}

    def record(self, n: int, state: FieldState) -> None:
        """Record all diagnostics of the state at step n"""
        h, p = self.h, self.params.p
        w, phi, psi = state.w, state.phi, state.psi
        weights = self.weights

        abs_w = np.abs(w)
        if self.c:
            power = abs_w ** (p + 1.0)
            potential = power * self.inv_pm1
            far = power * self.inv_p
            j_density = abs_w ** p * self.inv_pm1
        else:
            potential = far = j_density = np.zeros_like(w)
        cv = self.c * potential
        phi_sq, psi_sq = phi * phi, psi * psi
        kinetic = 0.5 * (phi_sq + psi_sq)

        s = self.series
        pot_int = weights @ potential
        s['potential'][n] = pot_int
        s['far_integral'][n] = weights @ far
        s['energy'][n] = 2.0 * math.pi * (weights @ (kinetic + cv))
        s['e_minus'][n] = math.pi * (weights @ phi_sq + self.c * pot_int)
        s['e_plus'][n] = math.pi * (weights @ psi_sq + self.c * pot_int)
        u0_est = w[1] / h
        u0_rich = (4.0 * u0_est - w[2] / (2.0 * h)) / 3.0
        s['u0_est'][n] = u0_est
        s['u0_richardson'][n] = u0_rich
        s['phi0'][n] = phi[0]

        lw = self.edge_line_weights if n in (0, self.n_steps) else self.line_weights
        lines = self.lines
        window = slice(n, n + self.n_r + 1)
        lines['out_potential'][window] += (lw * potential)[::-1]
        lines['out_phi_sq'][window] += (lw * phi_sq)[::-1]
        lines['out_m'][window] += (lw * far)[::-1]
        lines['out_j'][window] += (lw * j_density)[::-1]
        lines['in_potential'][window] += lw * potential
        lines['in_psi_sq'][window] += lw * psi_sq

        if self.shells:
            wt_wr = 0.25 * (phi_sq - psi_sq)
            for index, shell in self.shells.items():
                inside = slice(0, index + 1)
                outside = slice(index, self.n_r + 1)
                shell['kinetic_inside'][n] = h * (kinetic[inside].sum() - 0.5 * (kinetic[0] + kinetic[index]))
                shell['potential_inside'][n] = h * (potential[inside].sum() - 0.5 * (potential[0] + potential[index]))
                shell['far_outside'][n] = h * (far[outside].sum() - 0.5 * (far[index] + far[-1]))
                shell['w_at_radius'][n] = w[index]
                shell['boundary_term'][n] = 2.0 * math.pi * (self.morawetz_weights[index] @ wt_wr)

        density = u0_rich * u0_rich
        for region in self.regions.values():
            region.record(n, h, phi_sq, psi_sq, cv, far, density)

        for trace in self.traces.values():
            i = trace.node(n)
            if 0 <= i <= self.n_r:
                source = 0.0 if not self.c else abs_w[i] ** (p - 1.0) * w[i] * self.inv_pm1[i]
                trace.rows.append((n * h, i * h, w[i], phi[i], psi[i], source))

        for k, columns in self.verticals.items():
            columns['phi'][n] = phi[k]
            columns['psi'][n] = psi[k]
            columns['w'][n] = w[k]

        if n in self.snapshot_steps:
            snapshot = state.copy()
            snapshot.t = n * h
            self.states[n] = snapshot

    def build(self) -> Dict[str, Any]:
        """Assemble the recorded data into Trajectory fields"""
        h, n_r = self.h, self.n_r
        times = np.arange(self.n_steps + 1, dtype=float) * h
        indices = np.arange(self.n_steps + n_r + 1, dtype=float)
        series = StepSeries(t=times, **self.series)
        lines = LineFluxTable(tau=(indices - n_r) * h, s=indices * h, **self.lines)
        shells = {index: ShellSeries(radius=index * h, **columns) for index, columns in self.shells.items()}
        return {
            'states': self.states,
            'series': series,
            'lines': lines,
            'traces': {key: trace.result(h) for key, trace in self.traces.items()},
            'shells': shells,
            'regions': {name: region.result() for name, region in self.regions.items()},
            'verticals': self.verticals,
        }
