"""Linear probes, steering interventions, counterfactual flip rates and Welch tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .extraction import pca_embed, residualize, rsa_scene
from .scene_gen import (DIST_KIND, REL_KIND, CameraPose, QuestionSpec, Scene,
                        answer_question, relation_direction)

AXES = {"x": 0, "y": 1, "z": 2}


# ---------------------------------------------------------------------------
# ridge / kNN
# ---------------------------------------------------------------------------

@dataclass
class RidgeProbe:
    weights: np.ndarray  # (n_targets, d)
    intercept: np.ndarray  # (n_targets,)
    alpha: float
    meta: dict = field(default_factory=dict)

    def predict(self, H):
        return np.asarray(H, float) @ self.weights.T + self.intercept


def ridge_fit(H, targets, alpha: float = 1.0, fit_intercept: bool = True, meta=None) -> RidgeProbe:
    """Closed-form ridge: ``(Hc^T Hc + alpha I) W^T = Hc^T Yc``.

    With ``fit_intercept`` the data are centred first and the intercept is
    unpenalised.
    """
    H = np.asarray(H, float)
    Y = np.asarray(targets, float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if H.shape[0] != Y.shape[0]:
        raise ValueError("row counts of H and targets differ")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if fit_intercept:
        hm, ym = H.mean(0), Y.mean(0)
        Hc, Yc = H - hm, Y - ym
    else:
        hm, ym = np.zeros(H.shape[1]), np.zeros(Y.shape[1])
        Hc, Yc = H, Y
    d = H.shape[1]
    n = H.shape[0]
    if n < d:
        # dual form: W^T = Hc^T (Hc Hc^T + alpha I)^{-1} Yc
        G = Hc @ Hc.T + alpha * np.eye(n)
        try:
            Wt = Hc.T @ np.linalg.solve(G, Yc)
        except np.linalg.LinAlgError as e:
            raise np.linalg.LinAlgError("singular ridge system") from e
    else:
        A = Hc.T @ Hc + alpha * np.eye(d)
        if alpha == 0 and np.linalg.matrix_rank(A) < d:
            raise np.linalg.LinAlgError("singular ridge system at alpha = 0")
        Wt = np.linalg.solve(A, Hc.T @ Yc)
    W = Wt.T
    b = ym - W @ hm
    return RidgeProbe(W, b, float(alpha), dict(meta or {}))


def r2_score(y_true, y_pred):
    """Coefficient of determination per column."""
    y_true = np.asarray(y_true, float)
    y_pred = np.asarray(y_pred, float)
    if y_true.ndim == 1:
        y_true, y_pred = y_true[:, None], y_pred[:, None]
    ss_res = ((y_true - y_pred) ** 2).sum(0)
    ss_tot = ((y_true - y_true.mean(0)) ** 2).sum(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ss_tot > 0, 1 - ss_res / ss_tot, np.nan)


def knn_predict(H_train, labels_train, H_test, k: int = 5):
    """Majority vote of the ``k`` nearest training rows (Euclidean).

    Distance ties are broken by training index; vote ties go to the tied
    class holding the nearest neighbour.
    """
    Htr = np.asarray(H_train, float)
    ytr = np.asarray(labels_train)
    Hte = np.asarray(H_test, float)
    if Htr.shape[0] == 0:
        raise ValueError("empty training set")
    if k > Htr.shape[0]:
        raise ValueError("k exceeds the training size")
    d2 = (np.sum(Hte ** 2, 1)[:, None] - 2 * Hte @ Htr.T + np.sum(Htr ** 2, 1)[None])
    nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
    out = np.empty(Hte.shape[0], dtype=ytr.dtype)
    for i, row in enumerate(nn):
        labs = ytr[row]
        vals, counts = np.unique(labs, return_counts=True)
        tied = set(vals[counts == counts.max()].tolist())
        for lab in labs:  # neighbours are distance-ranked
            if lab in tied:
                out[i] = lab
                break
    return out


def knn_classify(H_train, labels_train, H_test, labels_test=None, k: int = 5):
    """kNN predictions, or accuracy when ``labels_test`` is given."""
    pred = knn_predict(H_train, labels_train, H_test, k)
    if labels_test is None:
        return pred
    return float(np.mean(pred == np.asarray(labels_test)))


def normalize_per_scene(X, scene_index):
    """Min-max scale each coordinate to [-1, 1] within each scene.

    Axes with zero range inside a scene map to 0.  Returns the normalised
    coordinates and a ``{scene: (lo, hi)}`` parameter table.
    """
    X = np.asarray(X, float)
    out = np.zeros_like(X)
    params = {}
    for s in np.unique(scene_index):
        sel = scene_index == s
        lo, hi = X[sel].min(0), X[sel].max(0)
        rng = hi - lo
        with np.errstate(divide="ignore", invalid="ignore"):
            out[sel] = np.where(rng > 0, 2 * (X[sel] - lo) / np.where(rng > 0, rng, 1) - 1, 0.0)
        params[int(s)] = (lo, hi)
    return out, params


def scene_folds(scene_index, folds: int, rng):
    scenes = np.unique(scene_index)
    if len(scenes) < folds:
        raise ValueError("fewer scenes than folds")
    perm = rng.permutation(scenes)
    return [np.isin(scene_index, chunk) for chunk in np.array_split(perm, folds)]


@dataclass
class ProbeReport:
    per_fold: dict
    mean: dict
    ci: dict  # 2 * standard error

    def rows(self):
        return [{"target": k, "mean": self.mean[k], "ci": self.ci[k]} for k in self.mean]


def cross_validated_probe_suite(H, X, colors, shapes, scene_index, folds: int = 5,
                                rng=None, k: int = 5, alpha: float = 1.0) -> ProbeReport:
    """Scene-level cross-validated colour/shape kNN, x/z ridge and RSA."""
    rng = rng if rng is not None else np.random.default_rng(0)
    H = np.asarray(H, float)
    X = np.asarray(X, float)
    res = {key: [] for key in ("color_acc", "shape_acc", "x_R2", "z_R2", "rsa_rho")}
    for test in scene_folds(scene_index, folds, rng):
        train = ~test
        kk = min(k, int(train.sum()))
        res["color_acc"].append(knn_classify(H[train], colors[train], H[test], colors[test], kk))
        res["shape_acc"].append(knn_classify(H[train], shapes[train], H[test], shapes[test], kk))
        probe = ridge_fit(H[train], X[train][:, [0, 2]], alpha)
        r2 = r2_score(X[test][:, [0, 2]], probe.predict(H[test]))
        res["x_R2"].append(float(r2[0]))
        res["z_R2"].append(float(r2[1]))
        rhos = [rsa_scene(H[scene_index == s], X[scene_index == s])
                for s in np.unique(scene_index[test]) if np.sum(scene_index == s) >= 3]
        res["rsa_rho"].append(float(np.nanmean(rhos)) if rhos else float("nan"))
    mean = {key: float(np.nanmean(v)) for key, v in res.items()}
    ci = {key: (float(2 * np.nanstd(v, ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0)
          for key, v in res.items()}
    return ProbeReport(res, mean, ci)


# ---------------------------------------------------------------------------
# steering
# ---------------------------------------------------------------------------

@dataclass
class SteeringPair:
    v_axis: np.ndarray
    v_null: np.ndarray
    target_axis: str


def build_steering_pair(probe: RidgeProbe, target_axis: str = "x", rng=None) -> SteeringPair:
    """Pseudo-inverse direction for one probe axis plus a length-matched null control."""
    W = probe.weights
    if np.linalg.matrix_rank(W) < W.shape[0]:
        raise ValueError("probe weights are rank deficient")
    a = AXES[target_axis] if isinstance(target_axis, str) else int(target_axis)
    Wp = np.linalg.pinv(W)  # (d, 3)
    v_axis = Wp[:, a]
    rng = rng if rng is not None else np.random.default_rng()
    g = rng.standard_normal(W.shape[1])
    g = g - Wp @ (W @ g)  # project onto null(W)
    g = g - Wp @ (W @ g)  # second pass for round-off
    v_null = g * (np.linalg.norm(v_axis) / np.linalg.norm(g))
    return SteeringPair(v_axis, v_null, target_axis if isinstance(target_axis, str) else "xyz"[a])


@dataclass
class SteeringReport:
    records: list  # dicts: direction, alpha, trial, dx, dy, dz
    sign_correct: dict  # direction -> (hits, n)
    welch: dict  # alpha -> WelchResult (axis vs null on the target axis)
    mean_delta: dict  # (direction, alpha) -> mean delta vector

    def sign_rate(self, direction):
        h, n = self.sign_correct[direction]
        return h / n if n else float("nan")


def steering_experiment(base_activations, probe: RidgeProbe, pair: SteeringPair,
                        alphas=(-0.30, -0.15, 0.15, 0.30), trials_per_cell: int = 15,
                        noise_sigma: float = 0.0, rng=None) -> SteeringReport:
    """Inject ``alpha * v`` into object latents and re-read the probe.

    Every trial picks an object (cycling through ``base_activations``),
    re-draws latent noise for the baseline and steered read-outs, and
    records the readout change.  The axis and null arms share the same
    noise draws (matched noise).
    """
    rng = rng if rng is not None else np.random.default_rng()
    Hb = np.atleast_2d(np.asarray(base_activations, float))
    a = AXES[pair.target_axis]
    records = []
    deltas = {}
    for alpha in alphas:
        for t in range(trials_per_cell):
            h = Hb[(len(records) // 2) % len(Hb)]
            e0 = noise_sigma * rng.standard_normal(h.shape)
            e1 = noise_sigma * rng.standard_normal(h.shape)
            base = probe.predict((h + e0)[None])[0]
            for name, v in (("axis", pair.v_axis), ("null", pair.v_null)):
                out = probe.predict((h + alpha * v + e1)[None])[0]
                dlt = out - base
                records.append({"direction": name, "alpha": float(alpha), "trial": t,
                                "dx": float(dlt[0]), "dy": float(dlt[1]), "dz": float(dlt[2])})
                deltas.setdefault((name, float(alpha)), []).append(dlt)
    key = ("dx", "dy", "dz")[a]
    sign = {}
    for name in ("axis", "null"):
        rs = [r for r in records if r["direction"] == name]
        hits = sum(1 for r in rs if np.sign(r[key]) == np.sign(r["alpha"]))
        sign[name] = (hits, len(rs))
    welch = {}
    for alpha in alphas:
        xa = [r[key] for r in records if r["direction"] == "axis" and r["alpha"] == alpha]
        xn = [r[key] for r in records if r["direction"] == "null" and r["alpha"] == alpha]
        welch[float(alpha)] = welch_t(xa, xn)
    mean_delta = {k: np.mean(v, axis=0) for k, v in deltas.items()}
    return SteeringReport(records, sign, welch, mean_delta)


# ---------------------------------------------------------------------------
# Welch t
# ---------------------------------------------------------------------------

@dataclass
class WelchResult:
    t: float
    p: float
    dof: float
    status: str = "ok"


def welch_t(sample_a, sample_b) -> WelchResult:
    """Unequal-variance two-sample t-test, two-sided."""
    a = np.asarray(sample_a, float)
    b = np.asarray(sample_b, float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0:
        if diff == 0:
            return WelchResult(float("nan"), float("nan"), float("nan"), "undefined")
        return WelchResult(float(np.sign(diff) * np.inf), 0.0, float("nan"), "zero_variance")
    t = diff / np.sqrt(se2)
    dof = se2 ** 2 / ((va ** 2 / (a.size - 1) if va > 0 else 0.0)
                      + (vb ** 2 / (b.size - 1) if vb > 0 else 0.0))
    p = 2 * stats.t.sf(abs(t), dof)
    return WelchResult(float(t), float(min(1.0, p)), float(dof))


# ---------------------------------------------------------------------------
# counterfactual flip rates
# ---------------------------------------------------------------------------

@dataclass
class CounterfactualSet:
    variants: dict  # name -> Scene; must include "original"
    questions: list  # QuestionSpec, shared across variants
    pose: CameraPose


def sample_question_specs(scene: Scene, pose: CameraPose, n: int, rng, variants=None,
                          max_tries: int = 1000) -> list:
    """Distinct question specs with no ties in any of the given scene variants."""
    from .scene_gen import sample_question_spec
    variants = variants or [scene]
    out, seen = [], set()
    for _ in range(max_tries):
        if len(out) == n:
            break
        spec = sample_question_spec(scene.m, rng)
        if spec in seen:
            continue
        if all(answer_question(spec, v.coords, pose) is not None for v in variants):
            out.append(spec)
            seen.add(spec)
    return out


def build_counterfactual_sets(scenes, trajectories, rng, n_questions: int = 9,
                              min_identities: int = 4) -> list:
    """Original / colour-swap / position-swap triples with shared questions."""
    from .scene_gen import SceneGenerationError, make_counterfactual
    sets = []
    for s, t in zip(scenes, trajectories):
        if len(set(s.identities.tolist())) < min_identities:
            continue
        try:
            cs = make_counterfactual(s, "color_swap", rng)
            ps = make_counterfactual(s, "position_swap", rng)
        except SceneGenerationError:
            continue
        variants = {"original": s, "color_swap": cs, "position_swap": ps}
        qs = sample_question_specs(s, t.frames[0], n_questions, rng, list(variants.values()))
        sets.append(CounterfactualSet(variants, qs, t.frames[0]))
    return sets


@dataclass
class FlipReport:
    flip_rate: dict  # (variant, kind) -> rate
    counts: dict  # (variant, kind) -> (flips, n)

    def rows(self):
        return [{"variant": v, "kind": k, "flip_rate": r, "flips": self.counts[(v, k)][0],
                 "n": self.counts[(v, k)][1]} for (v, k), r in sorted(self.flip_rate.items())]


def flip_rate_eval(readout_fn: Callable, counterfactual_sets) -> FlipReport:
    """Fraction of questions whose answer changes relative to the original scene.

    ``readout_fn(scene, spec, pose, variant)`` returns an answer key: ``"yes"``
    / ``"no"`` for relative questions, candidate slot 0 / 1 for distance
    questions.  Keys are slot-level, so a colour swap that only renames the
    right answer does not count as a flip.
    """
    counts = {}
    for cs in counterfactual_sets:
        if "original" not in cs.variants:
            raise ValueError("counterfactual set lacks the original scene")
        base = [readout_fn(cs.variants["original"], q, cs.pose, "original") for q in cs.questions]
        for name, scene in cs.variants.items():
            if name == "original":
                continue
            for q, b in zip(cs.questions, base):
                a = readout_fn(scene, q, cs.pose, name)
                f, n = counts.get((name, q.kind), (0, 0))
                counts[(name, q.kind)] = (f + int(a != b), n + 1)
    rates = {k: f / n for k, (f, n) in counts.items() if n}
    return FlipReport(rates, counts)


def ground_truth_readout(scene, spec, pose, variant=None):
    return answer_question(spec, scene.coords, pose)


def answer_from_coords(spec: QuestionSpec, Xhat, pose: CameraPose):
    """Answer a question from (predicted) coordinates; ties resolve to 'no' / slot 1."""
    if spec.kind == REL_KIND:
        a, b = spec.indices
        r, f = pose.ground_frame()
        g = relation_direction(spec.relation, r, f)
        return "yes" if g @ (Xhat[b] - Xhat[a]) > 0 else "no"
    ref, a, b = spec.indices
    return 0 if np.linalg.norm(Xhat[a] - Xhat[ref]) < np.linalg.norm(Xhat[b] - Xhat[ref]) else 1


@dataclass
class CoordinateHead:
    """Linear read-out of 3-d coordinates from the top principal components.

    ``basis`` (optional) residualises activations before the PCA, giving the
    residualised configuration; without it the head sees raw activations.
    """
    pca_mean: np.ndarray
    components: np.ndarray
    coef: np.ndarray  # (n_components + 1, 3)
    basis: np.ndarray | None = None

    @classmethod
    def fit(cls, H, X, basis=None, n_components: int = 3):
        Ht = residualize(H, basis) if basis is not None else np.asarray(H, float)
        pe = pca_embed(Ht, n_components)
        Z = np.column_stack([np.ones(len(Ht)), pe.Z])
        coef, *_ = np.linalg.lstsq(Z, X, rcond=None)
        W = basis.W if hasattr(basis, "W") else basis
        return cls(pe.mean, pe.components, coef, W)

    def predict(self, H):
        H = np.asarray(H, float)
        if self.basis is not None:
            H = residualize(H, self.basis)
        Z = (H - self.pca_mean) @ self.components.T
        return np.column_stack([np.ones(len(H)), Z]) @ self.coef


def emulator_readout(head: CoordinateHead, params, seed: int = 0):
    """Readout function that emulates each variant's latents and applies ``head``."""
    from .emulator import emulate_object_activations, scene_rng
    cache = {}

    def fn(scene, spec, pose, variant=None):
        if scene.scene_id not in cache:
            A = emulate_object_activations(scene, params, scene_rng(seed, scene.scene_id))
            cache[scene.scene_id] = head.predict(A.values)
        return answer_from_coords(spec, cache[scene.scene_id], pose)

    return fn
