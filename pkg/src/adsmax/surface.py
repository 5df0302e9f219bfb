"""Discrete spacelike graphs over the hyperbolic disk.

A graph t = u(y) over the Poincare disk is spacelike iff the Euclidean
gradient satisfies |grad u| < 2/(1+|y|^2); the certified margin of a mesh
function is eps with |grad u|^2 <= (1-eps) * (2/(1+|y|^2))^2 per triangle
(the bound evaluated at the triangle's outermost vertex).

The maximal-surface operator is assembled in weak divergence form.  With
w(y) = (1+|y|^2)/2 and phi = (1+|y|^2)/(1-|y|^2) the graph area is

    Area(u) = integral  lambda^2 sqrt(1 - w^2 |grad u|^2) dy,

a concave functional of u, and its gradient is -F with

    F_i(u) = integral  phi^2 v  grad u . grad N_i  dy,
    v = (1 - w^2 |grad u|^2)^(-1/2).

Mean curvature (trace of the shape operator for the future normal) is
recovered as H_i = -F_i / m_i with the lumped mass m_i = integral phi
lambda^2 N_i; the sign convention is pinned by the closed-form umbilic
surfaces u_r = arctan(tan r / phi), which have H = -2 tan r.

Shape operators are estimated by finite-differencing the unit normal along
mesh edges in the ambient R^{2,2}, solved per vertex in the graph coordinate
frame; the intrinsic Gauss curvature comes from angle defects of the
per-vertex metric.  The two routes are tied together by K = -1 - det B.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator

from . import lorentz as L
from .constants import (
    BOUNDARY_MASK_RINGS,
    CHI_MASK_TOL,
    MARGIN_FLOOR,
    SPACELIKE_MARGIN,
)
from .mesh import DiskMesh, vertex_neighbors

_GEOM_CACHE: dict[int, tuple] = {}


def fem_geometry(mesh: DiskMesh):
    """Per-triangle quantities reused by every assembly over a mesh."""
    key = id(mesh)
    hit = _GEOM_CACHE.get(key)
    if hit is not None and hit[0] is mesh:
        return hit[1]
    t = mesh.triangles
    p = mesh.vertices[t]  # (M,3,2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    # P1 basis gradients: rows (M, 3 basis, 2)
    grads = np.empty((len(t), 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        n = np.stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]], axis=-1)
        grads[:, k] = n / (2 * area)[:, None]
    # midpoint quadrature (degree-2 exact): points opposite each vertex
    mids = np.stack(
        [(p[:, 1] + p[:, 2]) / 2, (p[:, 2] + p[:, 0]) / 2, (p[:, 0] + p[:, 1]) / 2],
        axis=1,
    )  # (M,3,2)
    r2q = (mids**2).sum(axis=-1)                  # (M,3)
    wq = (1 + r2q) / 2                            # phi / lambda
    phiq = (1 + r2q) / (1 - r2q)
    lam2q = 4 / (1 - r2q) ** 2
    r2max = (p**2).sum(axis=-1).max(axis=1)       # outermost vertex of each cell
    slope_limit2 = 4.0 / (1 + r2max) ** 2
    geom = dict(
        area=area, grads=grads, wq=wq, phiq=phiq, lam2q=lam2q,
        slope_limit2=slope_limit2,
    )
    _GEOM_CACHE[key] = (mesh, geom)
    return geom


def triangle_gradients(mesh: DiskMesh, u):
    g = fem_geometry(mesh)
    ut = np.asarray(u, dtype=float)[mesh.triangles]  # (M,3)
    return np.einsum("mk,mkd->md", ut, g["grads"])


def triangle_margins(mesh: DiskMesh, u):
    """Per-triangle spacelike margin 1 - |grad u|^2 / slope_limit^2."""
    g = fem_geometry(mesh)
    gu = triangle_gradients(mesh, u)
    return 1.0 - (gu**2).sum(axis=1) / g["slope_limit2"]


@dataclass(frozen=True)
class SpacelikeGraph:
    mesh: DiskMesh
    u: np.ndarray
    margin: float = field(default=0.0)

    @staticmethod
    def certify(mesh: DiskMesh, u, floor: float = MARGIN_FLOOR) -> "SpacelikeGraph":
        u = np.asarray(u, dtype=float)
        eps = float(triangle_margins(mesh, u).min())
        if eps <= floor:
            raise ValueError(f"spacelike margin violated: eps = {eps:.3e}")
        return SpacelikeGraph(mesh, u, eps)


def recovered_gradient(mesh: DiskMesh, u):
    """Area-weighted per-vertex gradient of a P1 function."""
    g = fem_geometry(mesh)
    gu = triangle_gradients(mesh, u)
    acc = np.zeros((mesh.n_vertices, 2))
    wsum = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], gu * g["area"][:, None])
        np.add.at(wsum, mesh.triangles[:, k], g["area"])
    return acc / wsum[:, None]


def residual(mesh: DiskMesh, u):
    """F_i(u) = integral phi^2 v grad u . grad N_i; the negative of the
    area gradient.  Returns (F, per-triangle margins)."""
    g = fem_geometry(mesh)
    gu = triangle_gradients(mesh, u)
    margins = 1.0 - (gu**2).sum(axis=1) / g["slope_limit2"]
    vq = 1.0 / np.sqrt(np.maximum(1.0 - g["wq"] ** 2 * (gu**2).sum(axis=1)[:, None],
                                  1e-14))         # (M,3)
    coeff = (g["phiq"] ** 2 * vq).sum(axis=1) / 3.0  # quadrature of phi^2 v
    flux = coeff[:, None] * gu * g["area"][:, None]
    F = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(F, mesh.triangles[:, k],
                  (flux * g["grads"][:, k]).sum(axis=1))
    return F, margins


def lumped_mass(mesh: DiskMesh):
    """m_i = integral phi lambda^2 N_i, midpoint quadrature."""
    g = fem_geometry(mesh)
    w = g["phiq"] * g["lam2q"]  # (M,3) at midpoints opposite each vertex
    m = np.zeros(mesh.n_vertices)
    for k in range(3):
        # N_k vanishes at its opposite midpoint and is 1/2 at the other two
        contrib = (w.sum(axis=1) - w[:, k]) * 0.5 * g["area"] / 3.0
        np.add.at(m, mesh.triangles[:, k], contrib)
    return m


def mean_curvature(S: SpacelikeGraph):
    """Discrete-operator H: the residual/lumped-mass ratio whose zero set is
    the discrete maximal surface.  Exact for the converged solve; as a
    pointwise estimator it carries stencil-asymmetry bias, so refinement
    studies should use mean_curvature_pointwise.  Rim rows are NaN."""
    F, _ = residual(S.mesh, S.u)
    m = lumped_mass(S.mesh)
    H = -F / m
    H[S.mesh.boundary_mask] = np.nan
    return H


_STENCIL_CACHE: dict[int, tuple] = {}


def _two_ring_pairs(mesh: DiskMesh):
    """COO pairs (i, k) with k in the 2-ring neighborhood of i (k != i)."""
    key = id(mesh)
    hit = _STENCIL_CACHE.get(key)
    if hit is not None and hit[0] is mesh:
        return hit[1]
    e = vertex_neighbors(mesh)
    n = mesh.n_vertices
    A = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    A2 = (A + A @ A).tocoo()
    keep = A2.row != A2.col
    pairs = np.stack([A2.row[keep], A2.col[keep]], axis=-1)
    _STENCIL_CACHE[key] = (mesh, pairs)
    return pairs


def fit_derivatives(mesh: DiskMesh, u):
    """Per-vertex (du1, du2, u11, u12, u22) from a weighted cubic fit over
    the 2-ring stencil; second derivatives are O(h^2)-consistent at interior
    vertices."""
    u = np.asarray(u, dtype=float)
    pairs = _two_ring_pairs(mesh)
    i, k = pairs[:, 0], pairs[:, 1]
    d = mesh.vertices[k] - mesh.vertices[i]
    scale = np.zeros(mesh.n_vertices)
    cnt = np.zeros(mesh.n_vertices)
    np.add.at(scale, i, np.linalg.norm(d, axis=1))
    np.add.at(cnt, i, 1.0)
    scale = scale / np.maximum(cnt, 1.0)
    x = d / scale[i, None]
    du = u[k] - u[i]
    w = 1.0 / (1.0 + (x**2).sum(axis=1))
    # cubic basis without constant term (fit passes through the vertex)
    P = np.stack(
        [
            x[:, 0], x[:, 1],
            x[:, 0] ** 2, x[:, 0] * x[:, 1], x[:, 1] ** 2,
            x[:, 0] ** 3, x[:, 0] ** 2 * x[:, 1],
            x[:, 0] * x[:, 1] ** 2, x[:, 1] ** 3,
        ],
        axis=-1,
    )
    nb = P.shape[1]
    n = mesh.n_vertices
    ATA = np.zeros((n, nb, nb))
    ATB = np.zeros((n, nb))
    chunk = 200_000
    for lo in range(0, len(pairs), chunk):
        sl = slice(lo, lo + chunk)
        Pw = P[sl] * w[sl, None]
        np.add.at(ATA, i[sl], np.einsum("ea,eb->eab", Pw, P[sl]))
        np.add.at(ATB, i[sl], Pw * du[sl, None])
    ATA += 1e-12 * np.eye(nb)
    c = np.linalg.solve(ATA, ATB[..., None])[..., 0]
    s = scale
    return {
        "du": np.stack([c[:, 0] / s, c[:, 1] / s], axis=-1),
        "hess": np.stack(
            [2 * c[:, 2] / s**2, c[:, 3] / s**2, 2 * c[:, 4] / s**2], axis=-1
        ),  # (u11, u12, u22)
    }


def mean_curvature_pointwise(S: SpacelikeGraph):
    """Strong-form H = div(phi^2 v grad u) / (phi lambda^2) with fitted
    derivatives; converges under refinement on smooth surfaces.  NaN within
    one ring of the rim."""
    mesh = S.mesh
    y = mesh.vertices
    r2 = (y**2).sum(axis=1)
    phi = (1 + r2) / (1 - r2)
    lam2 = 4 / (1 - r2) ** 2
    wt = (1 + r2) / 2
    dphi = 4 * y / (1 - r2)[:, None] ** 2
    dwt = y
    fit = fit_derivatives(mesh, S.u)
    du = fit["du"]
    u11, u12, u22 = fit["hess"].T
    s = (du**2).sum(axis=1)
    v = 1.0 / np.sqrt(np.maximum(1.0 - wt**2 * s, 1e-14))
    Hu_du = np.stack([u11 * du[:, 0] + u12 * du[:, 1],
                      u12 * du[:, 0] + u22 * du[:, 1]], axis=-1)
    grad_v = v[:, None] ** 3 * (wt[:, None] * dwt * s[:, None]
                                + (wt**2)[:, None] * Hu_du)
    grad_phi2v = 2 * phi[:, None] * dphi * v[:, None] + (phi**2)[:, None] * grad_v
    div = phi**2 * v * (u11 + u22) + (grad_phi2v * du).sum(axis=1)
    H = div / (phi * lam2)
    H[~S.mesh.deep_interior_mask(1)] = np.nan
    return H


def tangent_stiffness(mesh: DiskMesh, u):
    """Sparse SPD Jacobian dF/du (frozen geometry, exact linearization)."""
    g = fem_geometry(mesh)
    gu = triangle_gradients(mesh, u)
    gu2 = (gu**2).sum(axis=1)
    vq = 1.0 / np.sqrt(np.maximum(1.0 - g["wq"] ** 2 * gu2[:, None], 1e-14))
    c1 = (g["phiq"] ** 2 * vq).sum(axis=1) / 3.0
    c2 = (g["phiq"] ** 2 * vq**3 * g["wq"] ** 2).sum(axis=1) / 3.0
    rows, cols, vals = [], [], []
    for a in range(3):
        ga = g["grads"][:, a]
        for b in range(3):
            gb = g["grads"][:, b]
            val = g["area"] * (
                c1 * (ga * gb).sum(axis=1)
                + c2 * (gu * ga).sum(axis=1) * (gu * gb).sum(axis=1)
            )
            rows.append(mesh.triangles[:, a])
            cols.append(mesh.triangles[:, b])
            vals.append(val)
    n = mesh.n_vertices
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return K.tocsr()


def graph_area(mesh: DiskMesh, u):
    """The concave area functional maximized by maximal surfaces."""
    g = fem_geometry(mesh)
    gu2 = (triangle_gradients(mesh, u) ** 2).sum(axis=1)
    integ = (g["lam2q"] * np.sqrt(
        np.maximum(1.0 - g["wq"] ** 2 * gu2[:, None], 0.0)
    )).sum(axis=1) / 3.0
    return float((integ * g["area"]).sum())


# ---------------------------------------------------------------------------
# ambient frames and shape data

def chart_frame(y, t):
    """Pushforwards (dq/dy1, dq/dy2, dq/dt) of the cylinder chart, (...,3,4)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    r2 = (y**2).sum(axis=-1)
    d = 1.0 - r2
    h3 = (1 + r2) / d
    ct, st = np.cos(t), np.sin(t)
    dh = np.empty(y.shape[:-1] + (2, 3))
    for j in range(2):
        dh[..., j, 0] = 2 * (j == 0) / d + 4 * y[..., 0] * y[..., j] / d**2
        dh[..., j, 1] = 2 * (j == 1) / d + 4 * y[..., 1] * y[..., j] / d**2
        dh[..., j, 2] = 4 * y[..., j] / d**2
    frame = np.zeros(y.shape[:-1] + (3, 4))
    for j in range(2):
        frame[..., j, 0] = dh[..., j, 0]
        frame[..., j, 1] = dh[..., j, 1]
        frame[..., j, 2] = dh[..., j, 2] * ct
        frame[..., j, 3] = dh[..., j, 2] * st
    frame[..., 2, 2] = -h3 * st
    frame[..., 2, 3] = h3 * ct
    return frame


def vertex_gradient(S: SpacelikeGraph):
    """Per-vertex gradient of u (cubic-fit; falls back to the P1 average on
    the rim where the one-sided fit is unreliable)."""
    du = fit_derivatives(S.mesh, S.u)["du"]
    rim = ~S.mesh.deep_interior_mask(0)
    if rim.any():
        du_p1 = recovered_gradient(S.mesh, S.u)
        du[rim] = du_p1[rim]
    # clamp into the spacelike cone (fit overshoot near steep rims)
    w = (1 + (S.mesh.vertices**2).sum(axis=1)) / 2
    norm = np.sqrt((du**2).sum(axis=1))
    cap = 0.999999 / w
    over = norm > cap
    if over.any():
        du[over] *= (cap[over] / norm[over])[:, None]
    return du


def gradient_function(S: SpacelikeGraph, du=None):
    """v = 1/sqrt(1 - phi^2 |grad u|^2_H) >= 1, per vertex."""
    y = S.mesh.vertices
    w = (1 + (y**2).sum(axis=1)) / 2
    du = vertex_gradient(S) if du is None else du
    s = 1.0 - w**2 * (du**2).sum(axis=1)
    if np.any(s <= 0):
        raise ValueError("spacelike margin violated at a vertex")
    return 1.0 / np.sqrt(s)


def normal_field(S: SpacelikeGraph, du=None):
    """Future unit normal nu per vertex as an R^{2,2} vector."""
    y = S.mesh.vertices
    r2 = (y**2).sum(axis=1)
    lam2 = 4 / (1 - r2) ** 2
    phi = (1 + r2) / (1 - r2)
    du = vertex_gradient(S) if du is None else du
    v = gradient_function(S, du)
    fr = chart_frame(y, S.u)
    horiz = (du[:, 0, None] * fr[:, 0] + du[:, 1, None] * fr[:, 1]) / lam2[:, None]
    nu = (phi * v)[:, None] * (horiz + fr[:, 2] / (phi**2)[:, None])
    return nu


def graph_points(S: SpacelikeGraph):
    return L.cyl_to_quadric(S.mesh.vertices, S.u)


def graph_tangent_frame(S: SpacelikeGraph, du=None):
    """Graph-coordinate tangent basis G_j = dq/dy_j + u_{,j} dq/dt, (N,2,4)."""
    du = vertex_gradient(S) if du is None else du
    fr = chart_frame(S.mesh.vertices, S.u)
    return fr[:, :2] + du[:, :, None] * fr[:, 2][:, None, :]


@dataclass(frozen=True)
class ShapeData:
    """Per-vertex extrinsic package in graph coordinates.

    I is the induced metric Gram matrix of (G1, G2); B the shape operator
    (I-self-adjoint, symmetrized in the least-squares fit); J the complex
    structure of I with the graph orientation.  K_ext = -1 - det B;
    K_int is the angle-defect curvature of I.  Entries on masked vertices
    (the rim layer) are NaN.
    """

    surface: SpacelikeGraph
    nu: np.ndarray        # (N,4)
    v: np.ndarray         # (N,)
    I: np.ndarray         # (N,2,2)
    B: np.ndarray         # (N,2,2)
    J: np.ndarray         # (N,2,2)
    H: np.ndarray         # (N,)  trace of B
    detB: np.ndarray      # (N,)
    k1: np.ndarray        # (N,) principal curvatures, k1 >= k2
    k2: np.ndarray
    K_ext: np.ndarray     # (N,) -1 - det B
    K_int: np.ndarray     # (N,) intrinsic angle-defect curvature
    mask: np.ndarray      # (N,) True where data is valid

    @property
    def mesh(self) -> DiskMesh:
        return self.surface.mesh


def _complex_structure(I):
    det = I[..., 0, 0] * I[..., 1, 1] - I[..., 0, 1] * I[..., 1, 0]
    s = np.sqrt(np.maximum(det, 1e-300))
    J = np.empty_like(I)
    J[..., 0, 0] = -I[..., 0, 1]
    J[..., 0, 1] = -I[..., 1, 1]
    J[..., 1, 0] = I[..., 0, 0]
    J[..., 1, 1] = I[..., 0, 1]
    return J / s[..., None, None]


def metric_gauss_curvature(mesh: DiskMesh, metric):
    """Angle-defect Gauss curvature of a per-vertex 2x2 metric field.

    Edge lengths use the midpoint metric; the defect at an interior vertex is
    divided by a third of the incident area.  Boundary vertices are NaN.
    """
    metric = np.asarray(metric, dtype=float)
    t = mesh.triangles
    pv = mesh.vertices
    # squared edge lengths, edge k opposite vertex k
    l2 = np.empty((len(t), 3))
    for k in range(3):
        a, b = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        d = pv[b] - pv[a]
        mid = 0.5 * (metric[a] + metric[b])
        l2[:, k] = np.einsum("mi,mij,mj->m", d, mid, d)
    l2 = np.maximum(l2, 1e-300)
    ang = np.empty((len(t), 3))
    for k in range(3):
        la2 = l2[:, (k + 1) % 3]
        lb2 = l2[:, (k + 2) % 3]
        lc2 = l2[:, k]
        cosk = (la2 + lb2 - lc2) / (2 * np.sqrt(la2 * lb2))
        ang[:, k] = np.arccos(np.clip(cosk, -1.0, 1.0))
    # Heron area from the metric lengths
    s = 0.5 * np.sqrt(l2).sum(axis=1)
    ls = np.sqrt(l2)
    har = np.sqrt(np.maximum(
        s * (s - ls[:, 0]) * (s - ls[:, 1]) * (s - ls[:, 2]), 0.0))
    defect = np.full(mesh.n_vertices, 2 * np.pi)
    area_share = np.zeros(mesh.n_vertices)
    for k in range(3):
        np.add.at(defect, t[:, k], -ang[:, k])
        np.add.at(area_share, t[:, k], har / 3.0)
    K = defect / np.maximum(area_share, 1e-300)
    K[mesh.boundary_mask] = np.nan
    return K


def shape_data(S: SpacelikeGraph, mask_rings: int = BOUNDARY_MASK_RINGS) -> ShapeData:
    mesh = S.mesh
    du = vertex_gradient(S)
    nu = normal_field(S, du)
    v = gradient_function(S, du)
    G = graph_tangent_frame(S, du)
    II = np.einsum("nad,d,nbd->nab", G, L.SIGNATURE, G)

    edges = vertex_neighbors(mesh)
    i, k = edges[:, 0], edges[:, 1]
    dy = mesh.vertices[k] - mesh.vertices[i]
    dnu = nu[k] - nu[i]
    # pair the ambient increment with the midpoint tangent frame (kills the
    # position and normal components and centers the difference)
    Gm = 0.5 * (G[i] + G[k])
    m = np.stack(
        [
            np.einsum("ed,d,ed->e", dnu, L.SIGNATURE, Gm[:, 0]),
            np.einsum("ed,d,ed->e", dnu, L.SIGNATURE, Gm[:, 1]),
        ],
        axis=-1,
    )
    # least squares for symmetric C = I B:  [dy1, dy2, 0; 0, dy1, dy2] c = m
    wgt = 1.0 / np.maximum(np.linalg.norm(dy, axis=1), 1e-30)
    A_rows = np.zeros((len(edges), 2, 3))
    A_rows[:, 0, 0] = dy[:, 0]
    A_rows[:, 0, 1] = dy[:, 1]
    A_rows[:, 1, 1] = dy[:, 0]
    A_rows[:, 1, 2] = dy[:, 1]
    A_rows *= wgt[:, None, None]
    m_w = m * wgt[:, None]
    ata = np.einsum("era,erb->eab", A_rows, A_rows)
    atb = np.einsum("era,er->ea", A_rows, m_w)
    ATA = np.zeros((mesh.n_vertices, 3, 3))
    ATB = np.zeros((mesh.n_vertices, 3))
    np.add.at(ATA, i, ata)
    np.add.at(ATB, i, atb)
    ATA += 1e-14 * np.eye(3)
    c = np.linalg.solve(ATA, ATB[..., None])[..., 0]
    C = np.empty((mesh.n_vertices, 2, 2))
    C[:, 0, 0] = c[:, 0]
    C[:, 0, 1] = C[:, 1, 0] = c[:, 1]
    C[:, 1, 1] = c[:, 2]
    B = np.linalg.solve(II, C)

    H = np.trace(B, axis1=1, axis2=2)
    detB = np.linalg.det(B)
    disc = np.maximum(H**2 - 4 * detB, 0.0)
    k1 = (H + np.sqrt(disc)) / 2
    k2 = (H - np.sqrt(disc)) / 2
    K_ext = -1.0 - detB
    K_int = metric_gauss_curvature(mesh, II)
    J = _complex_structure(II)

    mask = mesh.deep_interior_mask(mask_rings)
    for arr in (H, detB, k1, k2, K_ext, K_int):
        arr[~mask] = np.nan
    nanmat = ~mask
    B[nanmat] = np.nan
    return ShapeData(
        surface=S, nu=nu, v=v, I=II, B=B, J=J, H=H, detB=detB,
        k1=k1, k2=k2, K_ext=K_ext, K_int=K_int, mask=mask,
    )


def _metric_operator(mesh: DiskMesh, metric):
    """P1 stiffness and lumped mass of a per-vertex 2x2 metric field."""
    t = mesh.triangles
    g = fem_geometry(mesh)
    M = np.asarray(metric)[t].mean(axis=1)
    Minv = np.linalg.inv(M)
    sdet = np.sqrt(np.maximum(np.linalg.det(M), 1e-300))
    rows, cols, vals = [], [], []
    for a in range(3):
        ga = g["grads"][:, a]
        for b in range(3):
            gb = g["grads"][:, b]
            vals.append(np.einsum("md,mde,me->m", ga, Minv, gb)
                        * g["area"] * sdet)
            rows.append(t[:, a])
            cols.append(t[:, b])
    n = mesh.n_vertices
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    mass = np.zeros(n)
    for a in range(3):
        np.add.at(mass, t[:, a], g["area"] * sdet / 3.0)
    return K, mass


def chi_residual(sd: ShapeData, smooth_width: float = 0.25):
    """Residual of Delta chi = e^{4 chi} - 1 with chi = log(-det B)/4.

    Vertices with det B >= -CHI_MASK_TOL (flat spots) are masked; returns
    (residual, valid_mask).  The Laplacian is the P1 operator of the induced
    metric.  chi is mollified by heat steps of total width smooth_width
    (a fixed physical scale) before differentiating: the raw second
    difference would amplify the O(h^2) noise of the discrete det B by
    h^{-2}, while the mollified residual is refinement-decreasing.
    """
    mesh = sd.mesh
    detB = sd.detB
    chi_mask = sd.mask & np.isfinite(detB) & (detB < -CHI_MASK_TOL)
    chi = np.zeros(mesh.n_vertices)
    chi[chi_mask] = np.log(-detB[chi_mask]) / 4.0

    Ifield = np.where(np.isfinite(sd.I), sd.I, np.eye(2))
    K, mass = _metric_operator(mesh, Ifield)

    # explicit heat steps: dt at the stability limit, enough to reach
    # total variance smooth_width^2
    diagK = np.asarray(K.diagonal())
    dt = 0.5 / np.max(diagK / mass)
    rounds = int(np.ceil(smooth_width**2 / (2 * dt)))
    rounds = min(max(rounds, 1), 4000)
    valid0 = chi_mask.copy()
    ok = chi_mask.astype(float)  # indicator diffused alongside chi tracks
    for _ in range(rounds):      # contamination from masked/rim zeros
        chi = chi - dt * (K @ chi) / mass
        ok = ok - dt * (K @ ok) / mass

    lap = -(K @ chi) / mass
    # report where the mollifier saw essentially no masked data
    valid = (
        valid0
        & (ok > 0.98)
        & mesh.deep_interior_mask(BOUNDARY_MASK_RINGS)
    )
    res = np.full(mesh.n_vertices, np.nan)
    res[valid] = lap[valid] - (np.exp(4 * chi[valid]) - 1.0)
    return res, valid


# ---------------------------------------------------------------------------
# closed-form surfaces and the normal flow

def plane_surface(mesh: DiskMesh, q=None, branch=-1) -> SpacelikeGraph:
    """Graph of (a lift of) the totally geodesic plane dual to q."""
    q = L.E4 if q is None else (q.v if isinstance(q, L.QuadricPoint) else q)
    u = L.plane_graph_height(q, mesh.vertices, branch=branch)
    return SpacelikeGraph.certify(mesh, u)


def umbilic_surface(mesh: DiskMesh, r: float) -> SpacelikeGraph:
    """Surface at constant timelike distance r above the reference plane:
    u = arctan(sin r / sqrt(cos^2 r + sinh^2 d)) at hyperbolic radius d.
    Principal curvatures are both -tan r, so H = -2 tan r and
    K = -1 - tan^2 r."""
    if not abs(r) < np.pi / 2:
        raise ValueError("|r| < pi/2 required")
    sh = np.sinh(mesh.rho)
    u = np.arctan2(np.sin(r), np.sqrt(np.cos(r) ** 2 + sh**2))
    return SpacelikeGraph.certify(mesh, u)


def horosphere_height(y):
    """Closed-form height of the flat maximal surface over disk points:
    sigma = asinh(sqrt2 h1), beta = asinh(sqrt2 h2),
    u = atan2(cosh beta, cosh sigma)."""
    h = L.poincare_to_hyperboloid(y)
    sig = np.arcsinh(np.sqrt(2.0) * h[..., 0])
    bet = np.arcsinh(np.sqrt(2.0) * h[..., 1])
    return np.arctan2(np.cosh(bet), np.cosh(sig))


def horosphere_surface(mesh: DiskMesh, rotation: float = 0.0,
                       time_shift: float = 0.0, clip: bool = True):
    """The flat maximal surface: equidistant pi/4 from a spacelike geodesic.

    The default axis is the x1-geodesic; its boundary is the four-lightlike
    tent curve and the principal curvatures are -1 and +1 everywhere.  The
    margin of the interpolant goes to zero toward the four boundary corners,
    so when the requested mesh radius is too large the disk is clipped
    (radius reduced until the graph certificate holds).  rotation/time_shift
    move the surface by isometries that keep the closed form a graph.
    """
    from .mesh import make_mesh

    rot = np.array(
        [[np.cos(-rotation), -np.sin(-rotation)],
         [np.sin(-rotation), np.cos(-rotation)]]
    )
    radius = mesh.radius
    for _ in range(40):
        y = mesh.vertices @ rot.T if rotation != 0.0 else mesh.vertices
        u = horosphere_height(y) + time_shift
        if triangle_margins(mesh, u).min() > 0.0:
            return SpacelikeGraph(mesh, u, float(triangle_margins(mesh, u).min()))
        if not clip:
            raise ValueError("mesh radius too large for the horosphere chart")
        radius *= 0.95
        mesh = make_mesh(radius, mesh.n_rings, mesh.n_angular)
    raise ValueError("could not certify a clipped horosphere graph")


def horosphere_principal_frames(mesh: DiskMesh):
    """Coordinate directions (d sigma, d beta pullbacks) of the horosphere
    parameterization, as unit Euclidean vectors per vertex (for alignment
    audits of the curvature foliations)."""
    y = mesh.vertices
    h = L.poincare_to_hyperboloid(y)
    # gradients of sigma, beta in y via the chain rule through h1, h2
    r2 = (y**2).sum(axis=1)
    d = 1.0 - r2
    dh1 = np.stack([2 / d + 4 * y[:, 0] ** 2 / d**2, 4 * y[:, 0] * y[:, 1] / d**2],
                   axis=-1)
    dh2 = np.stack([4 * y[:, 0] * y[:, 1] / d**2, 2 / d + 4 * y[:, 1] ** 2 / d**2],
                   axis=-1)
    gs = dh1 * (np.sqrt(2) / np.sqrt(1 + 2 * h[:, 0] ** 2))[:, None]
    gb = dh2 * (np.sqrt(2) / np.sqrt(1 + 2 * h[:, 1] ** 2))[:, None]
    gs /= np.linalg.norm(gs, axis=1)[:, None]
    gb /= np.linalg.norm(gb, axis=1)[:, None]
    return gs, gb


def equidistant_prediction(k0, r):
    """Principal-curvature evolution along the unit normal flow:
    k(r) = tan(arctan k0 - r) in this sign convention."""
    return np.tan(np.arctan(k0) - r)


def equidistant(S: SpacelikeGraph, r: float,
                sd: ShapeData | None = None) -> SpacelikeGraph:
    """Normal-exponential surface at signed distance r, regraphed on the
    same mesh by vertical resampling (piecewise-linear, hence monotone)."""
    if not abs(r) < np.pi / 4:
        raise ValueError("|r| < pi/4 required")
    if r == 0.0:
        return S
    sd = sd if sd is not None else shape_data(S)
    kmax = np.nanmax(np.abs(np.stack([sd.k1, sd.k2])))
    pred = equidistant_prediction(np.array([kmax, -kmax]), r)
    if not np.all(np.isfinite(pred)) or np.nanmax(np.abs(np.tan(
            np.arctan(np.abs(kmax)) + abs(r)))) > 1e6:
        raise ValueError("focal point crossed: principal curvature leaves (-1,1)")
    if kmax >= 1.0:
        raise ValueError("principal curvatures must lie in (-1,1)")
    X = graph_points(S)
    nu = sd.nu
    Xr = np.cos(r) * X + np.sin(r) * nu
    y2, t2 = L.quadric_to_cyl(Xr, t_near=S.u)
    interp = LinearNDInterpolator(y2, t2)
    u2 = interp(S.mesh.vertices)
    bad = ~np.isfinite(u2)
    if bad.any():
        near = NearestNDInterpolator(y2, t2)
        u2[bad] = near(S.mesh.vertices[bad])
    return SpacelikeGraph.certify(S.mesh, u2, floor=0.0)


# ---------------------------------------------------------------------------
# export

def surface_table(S: SpacelikeGraph, sd: ShapeData | None = None):
    """Column dict for CSV export: y1, y2, t, u, v, H, K, k1, k2."""
    sd = sd if sd is not None else shape_data(S)
    Hfem = mean_curvature(S)
    return {
        "y1": S.mesh.vertices[:, 0],
        "y2": S.mesh.vertices[:, 1],
        "t": S.u,
        "u": S.u,
        "v": sd.v,
        "H": Hfem,
        "K": sd.K_ext,
        "k1": sd.k1,
        "k2": sd.k2,
    }
