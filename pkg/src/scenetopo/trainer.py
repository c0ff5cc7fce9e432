"""Dirichlet-ratio regularised training of a toy linear re-mapper.

The toy model maps emulated object latents ``H`` to ``F = H @ theta.T`` and
answers spatial questions through a fixed head that reads three linear
coordinates ``q = F @ Q.T``:

* relative questions: ``logit(yes) = kappa * g @ (q_B - q_A)``, with ``g``
  the ground direction of the relation in the first camera frame;
* distance questions: ``softmax(-kappa * ||q_c - q_R||^2)`` over the two
  candidates.

The regulariser is the scale-free Dirichlet ratio of the residualised
features ``F @ P_perp`` on each scene's kernel graph.  All gradients are
analytic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from .emulator import make_emulator_params, emulate_object_activations, scene_rng
from .extraction import cross_scene_prototypes, identity_basis_svd
from .scene_gen import (DIST_KIND, REL_KIND, SceneGenConfig, generate_qa,
                        generate_trajectory, relation_direction, sample_scene)
from .spectral import RATIO_EPS, auto_bandwidth, gaussian_kernel_graph, symmetric_eig

# ---------------------------------------------------------------------------
# the ratio and its gradient
# ---------------------------------------------------------------------------


def ratio_and_grad(H, L, L_complete, eps=RATIO_EPS):
    """Normalised Dirichlet ratio ``2 tr(H^T L H) / (2 tr(H^T L_K H) + eps)`` and gradient.

    Parameters
    ----------
    H : ndarray, shape (m, d)
    L : ndarray, shape (m, m)
        Kernel-graph Laplacian (masked rows/columns zero).
    L_complete : ndarray, shape (m, m)
        Complete-graph Laplacian over the valid objects.

    Returns
    -------
    value : float
    grad : ndarray, shape (m, d)
    """
    LH = L @ H
    KH = L_complete @ H
    num = 2.0 * float(np.sum(H * LH))
    den = 2.0 * float(np.sum(H * KH)) + eps
    r = num / den
    grad = (4.0 * LH - r * 4.0 * KH) / den
    return r, grad


def dirichlet_ratio_grad(H, L, L_complete, eps=RATIO_EPS):
    """Gradient of the normalised ratio with respect to ``H`` (quotient rule)."""
    return ratio_and_grad(H, L, L_complete, eps)[1]


# ---------------------------------------------------------------------------
# task construction
# ---------------------------------------------------------------------------

@dataclass
class TaskConfig:
    """World used by the toy trainer.

    The defaults plant a low-noise spatial signal that the randomly oriented
    head cannot read at initialisation, so that the regulariser's pull
    towards smooth, topology-faithful features speeds up learning while its
    optimum (a single smoothest direction) conflicts with the two ground axes
    the relative questions need.
    """
    d: int = 64
    n_train: int = 100
    n_val: int = 200
    n_questions: int = 8
    min_objects: int = 4
    max_objects: int = 8
    noise_sigma: float = 0.02
    spatial_scale: float = 0.1
    identity_norm: float = 1.0
    offset_norm: float = 2.0
    kappa: float = 1.0
    k_basis: int = 23
    fiedler_scale: float = 0.15


@dataclass
class Batch:
    H: np.ndarray  # (B, N, d)
    mask: np.ndarray  # (B, N)
    X: np.ndarray  # (B, N, 3)
    Wk: np.ndarray  # (B, N, N) masked kernel weights
    Mk: np.ndarray  # (B, N, N) valid-pair mask
    has_ratio: np.ndarray  # (B,) scene has >= 2 valid objects
    # questions
    q_scene: np.ndarray  # (Q,)
    q_kind: np.ndarray  # (Q,) 0 relative, 1 distance
    q_a: np.ndarray
    q_b: np.ndarray
    q_ref: np.ndarray
    q_dir: np.ndarray  # (Q, 3)
    q_y: np.ndarray  # (Q,) relative: 1 for yes; distance: 1 when b is closer

    def subset(self, idx):
        idx = np.asarray(idx)
        remap = -np.ones(self.H.shape[0], int)
        remap[idx] = np.arange(len(idx))
        keep = np.isin(self.q_scene, idx)
        return Batch(self.H[idx], self.mask[idx], self.X[idx], self.Wk[idx], self.Mk[idx],
                     self.has_ratio[idx], remap[self.q_scene[keep]], self.q_kind[keep],
                     self.q_a[keep], self.q_b[keep], self.q_ref[keep], self.q_dir[keep],
                     self.q_y[keep])


def _pack_batch(H_list, X_list, questions, n_max):
    B = len(H_list)
    d = H_list[0].shape[1]
    H = np.zeros((B, n_max, d))
    X = np.zeros((B, n_max, 3))
    mask = np.zeros((B, n_max), bool)
    Wk = np.zeros((B, n_max, n_max))
    Mk = np.zeros((B, n_max, n_max))
    has = np.zeros(B, bool)
    for i, (h, x) in enumerate(zip(H_list, X_list)):
        m = len(h)
        H[i, :m], X[i, :m], mask[i, :m] = h, x, True
        if m >= 2:
            has[i] = True
            tau = auto_bandwidth(x)
            d2 = ((x[:, None] - x[None]) ** 2).sum(-1)
            w = np.exp(-d2 / (2 * tau ** 2))
            np.fill_diagonal(w, 0.0)
            Wk[i, :m, :m] = w
            mm = np.ones((m, m))
            np.fill_diagonal(mm, 0.0)
            Mk[i, :m, :m] = mm
    q = np.array(questions, dtype=float).reshape(-1, 9)
    return Batch(H, mask, X, Wk, Mk, has,
                 q[:, 0].astype(int), q[:, 1].astype(int), q[:, 2].astype(int),
                 q[:, 3].astype(int), q[:, 4].astype(int), q[:, 5:8], q[:, 8])


@dataclass
class Task:
    config: TaskConfig
    train: Batch
    val: Batch
    P_perp: np.ndarray
    Q: np.ndarray  # (3, d) head read-out rows
    basis_W: np.ndarray


def fiedler_feature(X):
    """Per-object Fiedler-vector value on the scene kernel graph, unit RMS.

    This is the single most Dirichlet-smooth function of the scene, but it is
    a nonlinear, layout-dependent function of position and carries no
    camera-frame orientation.  Planting it gives the ratio an optimum that
    differs from what the relative-position questions need.
    """
    X = np.asarray(X, float)
    m = len(X)
    if m < 2:
        return np.zeros(m)
    L = gaussian_kernel_graph(X).L
    z = symmetric_eig(L).eigenvectors[:, 1]
    return z * np.sqrt(m)


def make_task(config: TaskConfig | None = None, seed: int = 0) -> Task:
    """Sample scenes, questions and latents for one trainer world.

    Latents follow ``h = c + u_id + S x + eps`` with the planted identity and
    spatial directions of :func:`make_emulator_params`, rescaled to the
    configured norms.  The nuisance basis is the top-``k`` SVD of the
    training-set identity prototypes; the head reads three random orthonormal
    directions inside its complement.
    """
    cfg = config or TaskConfig()
    rng = np.random.default_rng(seed)
    params = make_emulator_params(d=cfg.d, identity_share=0.5, spatial_share=0.1,
                                  noise_sigma=cfg.noise_sigma, seed=seed,
                                  total_energy=float(cfg.d), offset=True)
    U = params.identity_directions
    U = U * (cfg.identity_norm / np.sqrt(np.mean(np.sum(U ** 2, 0))))
    S = params.spatial_basis * cfg.spatial_scale
    c = params.offset / max(np.linalg.norm(params.offset), 1e-300) * cfg.offset_norm
    # a direction orthogonal to every planted span carries the misaligned feature
    taken = np.column_stack([params.identity_basis, params.spatial_basis, params.offset])
    f_dir = np.linalg.qr(np.column_stack([taken, rng.standard_normal(cfg.d)]))[0][:, -1]
    sgc = SceneGenConfig(min_objects=cfg.min_objects, max_objects=cfg.max_objects)

    def build(n):
        Hs, Xs, qs, ids = [], [], [], []
        for i in range(n):
            scene = sample_scene(sgc, rng)
            traj = generate_trajectory("orbit", scene, rng)
            items = generate_qa(scene, traj, cfg.n_questions, rng)
            X = scene.coords
            Hm = c + U[:, scene.identities].T + X @ S.T
            if cfg.fiedler_scale:
                Hm = Hm + cfg.fiedler_scale * np.outer(fiedler_feature(X), f_dir)
            Hm = Hm + cfg.noise_sigma * rng.standard_normal(Hm.shape)
            r, f = traj.frames[0].ground_frame()
            for it in items:
                if it.kind == REL_KIND:
                    a, b = it.object_indices
                    g = relation_direction(it.relation, r, f)
                    qs.append([i, 0, a, b, 0, *g, 1.0 if it.answer == "yes" else 0.0])
                else:
                    ref, a, b = it.object_indices
                    qs.append([i, 1, a, b, ref, 0, 0, 0, 1.0 if it.answer == scene.names[b] else 0.0])
            Hs.append(Hm)
            Xs.append(X)
            ids.extend(scene.identities)
        return _pack_batch(Hs, Xs, qs, cfg.max_objects), np.asarray(ids)

    train, ids = build(cfg.n_train)
    val, _ = build(cfg.n_val)
    present, lab = np.unique(ids, return_inverse=True)
    protos = cross_scene_prototypes(train.H[train.mask], lab, len(present))
    basis = identity_basis_svd(protos, min(cfg.k_basis, len(present)))
    P = basis.projector()
    Qh, _ = np.linalg.qr(P @ rng.standard_normal((cfg.d, 3)))
    return Task(cfg, train, val, P, Qh.T.copy(), basis.W)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

@dataclass
class LossBreakdown:
    ce: float
    dirichlet_ratio: float
    total: float
    per_scene_ratio: np.ndarray
    accuracy: float = float("nan")
    lam: float = 0.0


def _laplacians(Wk, Mk):
    Lw = np.einsum("bij->bi", Wk)[:, :, None] * np.eye(Wk.shape[1]) - Wk
    Lm = np.einsum("bij->bi", Mk)[:, :, None] * np.eye(Mk.shape[1]) - Mk
    return Lw, Lm


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def head_forward(F, batch: Batch, Q, kappa):
    """Head logits, per-question CE, correctness and ``dCE/dq``."""
    q = F @ Q.T  # (B, N, 3)
    s = batch.q_scene
    qa, qb, qr = q[s, batch.q_a], q[s, batch.q_b], q[s, batch.q_ref]
    rel = batch.q_kind == 0
    y = batch.q_y
    # relative
    z = kappa * np.sum(batch.q_dir * (qb - qa), axis=1)
    ce_rel = -(y * _log_sigmoid(z) + (1 - y) * _log_sigmoid(-z))
    dz = expit(z) - y
    # distance
    da, db = qa - qr, qb - qr
    sa = -kappa * np.sum(da * da, 1)
    sb = -kappa * np.sum(db * db, 1)
    lse = np.logaddexp(sa, sb)
    ce_dist = lse - np.where(y > 0.5, sb, sa)
    pb = np.exp(sb - lse)
    ds_b = pb - y
    ds_a = -ds_b
    ce = np.where(rel, ce_rel, ce_dist)
    correct = np.where(rel, (z > 0) == (y > 0.5), (sb > sa) == (y > 0.5))
    # gradients wrt q rows
    g_qa = np.where(rel[:, None], -kappa * dz[:, None] * batch.q_dir,
                    ds_a[:, None] * (-2 * kappa) * da)
    g_qb = np.where(rel[:, None], kappa * dz[:, None] * batch.q_dir,
                    ds_b[:, None] * (-2 * kappa) * db)
    g_qr = np.where(rel[:, None], 0.0,
                    ds_a[:, None] * (2 * kappa) * da + ds_b[:, None] * (2 * kappa) * db)
    return ce, correct, (g_qa, g_qb, g_qr)


def total_loss(theta, batch: Batch, P_perp, Q, lam, kappa=1.0, layers=None,
               need_grad=True):
    """Cross-entropy plus ``lam`` times the mean per-scene Dirichlet ratio.

    Parameters
    ----------
    theta : ndarray, shape (d, d)
    batch : Batch
    P_perp : ndarray, shape (d, d)
        Residualising projector applied before the ratio.
    Q : ndarray, shape (3, d)
        Head read-out rows.
    lam : float
    layers : list of ndarray, optional
        Fixed maps ``A_l``; the ratio is averaged over ``F @ A_l.T`` with equal
        weight.  Defaults to the single identity layer.

    Returns
    -------
    LossBreakdown, gradient wrt ``theta`` (or None)
    """
    H = batch.H
    F = H @ theta.T
    ce_q, correct, (g_qa, g_qb, g_qr) = head_forward(F, batch, Q, kappa)
    nq = max(len(ce_q), 1)
    ce = float(ce_q.sum() / nq)
    acc = float(correct.mean()) if len(correct) else float("nan")

    Lw, Lm = _laplacians(batch.Wk, batch.Mk)
    layers = layers if layers is not None else [None]
    idx = np.nonzero(batch.has_ratio)[0]
    per_scene = np.full(H.shape[0], np.nan)
    G_F = np.zeros_like(F)
    ratio = 0.0
    if len(idx):
        acc_r = np.zeros(len(idx))
        for A in layers:
            FA = F if A is None else F @ A.T
            Fr = FA[idx] @ P_perp
            LF = Lw[idx] @ Fr
            KF = Lm[idx] @ Fr
            num = 2 * np.einsum("bnd,bnd->b", Fr, LF)
            den = 2 * np.einsum("bnd,bnd->b", Fr, KF) + RATIO_EPS
            r = num / den
            acc_r += r / len(layers)
            if need_grad and lam != 0:
                g = 4 * (LF - r[:, None, None] * KF) / den[:, None, None]
                g = g @ P_perp
                if A is not None:
                    g = g @ A
                G_F[idx] += lam * g / (len(idx) * len(layers))
        per_scene[idx] = acc_r
        ratio = float(acc_r.mean())
    total = ce + lam * ratio
    br = LossBreakdown(ce, ratio, total, per_scene, acc, lam)
    if not need_grad:
        return br, None
    G_q = np.zeros(F.shape[:2] + (3,))
    s = batch.q_scene
    np.add.at(G_q, (s, batch.q_a), g_qa / nq)
    np.add.at(G_q, (s, batch.q_b), g_qb / nq)
    np.add.at(G_q, (s, batch.q_ref), g_qr / nq)
    G_F += G_q @ Q
    grad = np.einsum("bnd,bne->de", G_F, H)
    return br, grad


def symbolic_layers(d, n_layers=5, strength=0.1, seed=0):
    """Fixed near-identity maps standing in for successive hooked layers."""
    rng = np.random.default_rng(seed)
    out = [np.eye(d)]
    for _ in range(n_layers - 1):
        A = rng.standard_normal((d, d)) / np.sqrt(d)
        out.append(np.eye(d) + strength * (A - A.T))
    return out


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    lam: float = 0.0
    steps: int = 500
    lr: float = 1e-2
    momentum: float = 0.9
    batch: int = 16
    seed: int = 0
    eval_every: int = 25
    n_layers: int = 1
    divergence_factor: float = 10.0
    weight_decay: float = 0.0  # pull towards the identity map, optimiser-side


@dataclass
class ToyModel:
    theta: np.ndarray
    Q: np.ndarray
    P_perp: np.ndarray
    kappa: float = 1.0

    @classmethod
    def init(cls, task: Task):
        return cls(np.eye(task.config.d), task.Q, task.P_perp, task.config.kappa)

    def loss(self, batch, lam, layers=None, need_grad=True):
        return total_loss(self.theta, batch, self.P_perp, self.Q, lam, self.kappa, layers,
                          need_grad)

    def evaluate(self, batch, layers=None):
        br, _ = self.loss(batch, 0.0, layers, need_grad=False)
        return br


@dataclass
class TrainResult:
    model: ToyModel
    trace: list  # dicts: step, ce, ratio, total, val_acc
    diverged: bool
    final_val_acc: float
    final_ratio: float
    final_val_ce: float = float("nan")
    message: str = ""


def train(task: Task, config: TrainConfig | None = None, model: ToyModel | None = None,
          full_batch: bool = False) -> TrainResult:
    """Momentum gradient descent on ``CE + lam * ratio``.

    Minibatches are drawn from a stream seeded by ``config.seed``.  The
    optional weight decay adds ``(wd/2) ||theta - I||^2`` to the objective
    being descended but is not part of the reported losses.  Training
    stops early, flagged as diverged, if the total loss exceeds
    ``divergence_factor`` times its initial value or becomes non-finite.
    """
    cfg = config or TrainConfig()
    model = model or ToyModel.init(task)
    model = ToyModel(model.theta.copy(), model.Q, model.P_perp, model.kappa)
    layers = symbolic_layers(task.config.d, cfg.n_layers, seed=cfg.seed) if cfg.n_layers > 1 else None
    rng = np.random.default_rng([cfg.seed, 7919])
    n = task.train.H.shape[0]
    vel = np.zeros_like(model.theta)
    trace = []
    initial = None
    val_acc = model.evaluate(task.val).accuracy
    diverged, msg = False, ""
    for step in range(cfg.steps):
        batch = task.train if full_batch else task.train.subset(
            np.sort(rng.choice(n, min(cfg.batch, n), replace=False)))
        br, g = model.loss(batch, cfg.lam, layers)
        if initial is None:
            initial = br.total
        if not math.isfinite(br.total) or br.total > cfg.divergence_factor * initial:
            diverged = True
            msg = f"loss {br.total:.4g} exceeded {cfg.divergence_factor}x initial {initial:.4g} at step {step}"
            break
        if cfg.weight_decay:
            g = g + cfg.weight_decay * (model.theta - np.eye(model.theta.shape[0]))
        vel = cfg.momentum * vel + g
        model.theta -= cfg.lr * vel
        if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.steps:
            val_acc = model.evaluate(task.val).accuracy
        trace.append({"step": step, "ce": br.ce, "ratio": br.dirichlet_ratio,
                      "total": br.total, "val_acc": val_acc})
    ev = model.evaluate(task.val, layers)
    return TrainResult(model, trace, diverged, ev.accuracy, ev.dirichlet_ratio, ev.ce, msg)


@dataclass
class SweepReport:
    lambdas: list
    records: list  # dicts: lambda, seed, final_val_acc, final_ratio, diverged
    mean: dict
    ci: dict
    rise: bool | None = None
    fall: bool | None = None
    best_lambda: float | None = None

    def rows(self):
        return [{"lambda": r["lambda"], "seed": r["seed"], "final_val_acc": r["final_val_acc"],
                 "final_ratio": r["final_ratio"]} for r in self.records]


def _sweep_cell(args):
    task_config, train_config, seed, lams = args
    task = make_task(task_config, seed=seed)
    out = []
    for lam in lams:
        cfg = TrainConfig(**{**asdict(train_config), "lam": lam, "seed": seed})
        res = train(task, cfg)
        out.append({"lambda": lam, "seed": seed, "final_val_acc": res.final_val_acc,
                    "final_ratio": res.final_ratio, "diverged": res.diverged})
    return out


def lambda_sweep(lambdas=(0.0, 0.3, 1.0, 3.0, 9.0), n_seeds: int = 4,
                 task_config: TaskConfig | None = None, train_config: TrainConfig | None = None,
                 seeds=None, jobs: int = 1) -> SweepReport:
    """Validation accuracy per ``lambda`` over seeds, with rise/fall flags.

    Each seed builds its own world; every ``lambda`` is trained on the same
    world and minibatch stream of that seed.  With ``jobs > 1`` seeds run in
    worker processes; results do not depend on ``jobs``.
    """
    lambdas = [float(x) for x in lambdas]
    if not lambdas:
        raise ValueError("empty lambda grid")
    base = train_config or TrainConfig()
    seeds = list(range(n_seeds)) if seeds is None else list(seeds)
    cells = [(task_config, base, s, lambdas) for s in seeds]
    if jobs > 1 and len(cells) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    recs = [r for cell in results for r in cell]
    mean, ci = {}, {}
    for lam in lambdas:
        v = np.array([r["final_val_acc"] for r in recs if r["lambda"] == lam])
        mean[lam] = float(v.mean())
        ci[lam] = float(2 * v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    rep = SweepReport(lambdas, recs, mean, ci)
    nz = [l for l in lambdas if l != 0.0]
    if 0.0 in lambdas and nz:
        best = max(nz, key=lambda l: mean[l])
        rep.best_lambda = best
        rep.rise = mean[best] > mean[0.0]
        rep.fall = mean[max(nz)] < mean[0.0]
    return rep


# ---------------------------------------------------------------------------
# risk expansion probe
# ---------------------------------------------------------------------------

@dataclass
class RiskProbeReport:
    lambdas: np.ndarray
    risk: np.ndarray
    slope: float
    intercept: float
    r2: float
    curvature: float
    base_risk: float
    converged: bool


def _objective_grad_norm(model, batch, lam, wd):
    _, g = model.loss(batch, lam)
    g = g + wd * (model.theta - np.eye(model.theta.shape[0]))
    return float(np.linalg.norm(g))


def risk_decomposition_probe(task: Task, lambdas=(0.01, 0.02, 0.05), base_steps: int = 4000,
                             probe_steps: int = 1000, lr: float = 1e-2, momentum: float = 0.9,
                             weight_decay: float = 0.05, grad_tol: float = 1e-3,
                             require_converged: bool = True,
                             base_model: ToyModel | None = None) -> RiskProbeReport:
    """First-order effect of a small ``lambda`` on the validation spatial risk.

    Full-batch momentum descent on ``CE + (wd/2)||theta - I||^2`` gives a
    unique ``theta*`` at ``lambda = 0`` (without the anchor, CE on separable
    data has no finite minimiser).  From ``theta*`` each small ``lambda`` is
    re-optimised and the validation cross-entropy is regressed on
    ``lambda``; the slope estimates ``-beta * Delta``.

    Raises
    ------
    RuntimeError
        If the ``lambda = 0`` optimum is not reached, i.e. the objective
        gradient norm is above ``grad_tol`` times its initial value.
    """
    wd = weight_decay
    cfg0 = TrainConfig(lam=0.0, steps=base_steps, lr=lr, momentum=momentum,
                       eval_every=base_steps, weight_decay=wd)
    if base_model is None:
        init = ToyModel.init(task)
        g0 = _objective_grad_norm(init, task.train, 0.0, wd)
        base_model = train(task, cfg0, full_batch=True).model
        rel = _objective_grad_norm(base_model, task.train, 0.0, wd) / max(g0, 1e-300)
        converged = rel < grad_tol
        if require_converged and not converged:
            raise RuntimeError(f"lambda=0 run not converged (relative gradient norm {rel:.2e})")
    else:
        converged = True
    grid = np.concatenate([[0.0], np.asarray(lambdas, float)])
    risk = []
    for lam in grid:
        if lam == 0.0:
            risk.append(base_model.evaluate(task.val).ce)
            continue
        cfg = TrainConfig(**{**asdict(cfg0), "lam": float(lam), "steps": probe_steps,
                             "eval_every": probe_steps})
        risk.append(train(task, cfg, model=base_model, full_batch=True).final_val_ce)
    risk = np.array(risk)
    A = np.column_stack([np.ones_like(grid), grid])
    coef, *_ = np.linalg.lstsq(A, risk, rcond=None)
    ss_tot = np.sum((risk - risk.mean()) ** 2)
    r2 = 1 - np.sum((risk - A @ coef) ** 2) / ss_tot if ss_tot > 0 else 1.0
    quad = float(np.polyfit(grid, risk, 2)[0]) if len(grid) >= 3 else float("nan")
    return RiskProbeReport(grid, risk, float(coef[1]), float(coef[0]), float(r2), quad,
                           float(risk[0]), bool(converged))


# ---------------------------------------------------------------------------
# sample complexity
# ---------------------------------------------------------------------------

@dataclass
class SampleComplexityReport:
    d: int
    N: np.ndarray
    err_projected: np.ndarray
    err_full: np.ndarray
    ratio: np.ndarray  # NaN where N < d
    slope_projected: float


def sample_complexity_experiment(d: int = 64, N_grid=(128, 256, 512, 1024, 2048),
                                 sigma_xi: float = 1.0, n_reps: int = 50, rng=None
                                 ) -> SampleComplexityReport:
    """Projected versus full least squares when the target lives in 3 dims.

    Features are ``phi = V a + V_perp b`` with ``a`` uniform on ``[-1, 1]^3``
    (object coordinates) and ``b ~ N(0, I/3)`` nuisance, so that the feature
    covariance is ``I/3``.  Labels are ``y = w*^T phi + xi`` with ``w*`` in
    ``span(V)``.  Errors are the population excess risk
    ``(w_hat - w*)^T Sigma (w_hat - w*)``.
    """
    rng = rng if rng is not None else np.random.default_rng()
    Qm, _ = np.linalg.qr(rng.standard_normal((d, d)))
    V, Vp = Qm[:, :3], Qm[:, 3:]
    Sigma = np.eye(d) / 3.0
    Sig3 = np.eye(3) / 3.0
    w_star = V @ rng.standard_normal(3)
    a_star = V.T @ w_star
    ep, ef = [], []
    for N in N_grid:
        e_p, e_f = [], []
        for _ in range(n_reps):
            a = rng.uniform(-1, 1, (N, 3))
            b = rng.standard_normal((N, d - 3)) / np.sqrt(3.0)
            Phi = a @ V.T + b @ Vp.T
            y = Phi @ w_star + sigma_xi * rng.standard_normal(N)
            Psi = Phi @ V
            ah, *_ = np.linalg.lstsq(Psi, y, rcond=None)
            wh, *_ = np.linalg.lstsq(Phi, y, rcond=None)
            da = ah - a_star
            dw = wh - w_star
            e_p.append(float(da @ Sig3 @ da))
            e_f.append(float(dw @ Sigma @ dw))
        ep.append(np.mean(e_p))
        ef.append(np.mean(e_f))
    N = np.asarray(N_grid, float)
    ep, ef = np.array(ep), np.array(ef)
    ratio = np.where(N > d + 1, ef / np.where(ep > 0, ep, np.nan), np.nan)
    if len(N) >= 2 and np.all(ep > 0):
        slope = float(np.polyfit(np.log(N), np.log(ep), 1)[0])
    else:
        slope = float("nan")
    return SampleComplexityReport(d, N, ep, ef, ratio, slope)
