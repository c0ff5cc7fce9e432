"""Synthetic scenes, camera trajectories, spatial QA and counterfactual variants."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

COLORS = ("red", "green", "blue", "yellow", "cyan", "magenta", "orange", "purple")
SHAPES = ("cube", "sphere", "cylinder")
SIZES = (0.4, 0.6, 0.8)
BOUNDS = 4.0
MIN_SEPARATION = 0.2
N_FRAMES = 16
FOV_DEG = 60.0

REL_KIND = "relative_position_binary"
DIST_KIND = "distance_order_ternary"
RELATIONS = ("left of", "right of", "in front of", "behind")


class SceneGenerationError(RuntimeError):
    """Raised when a rejection-sampling budget runs out."""


@dataclass(frozen=True)
class SceneObject:
    color: str
    shape: str
    size: float
    position: tuple

    @property
    def name(self) -> str:
        return f"{self.color} {self.shape}"

    @property
    def radius(self) -> float:
        return self.size / 2.0

    @property
    def identity(self) -> int:
        """Index into the ``len(COLORS) * len(SHAPES)`` identity inventory."""
        return identity_index(self.color, self.shape)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "shape": self.shape,
            "color": self.color,
            "size": self.size,
            "world_position": [float(v) for v in self.position],
        }

    @classmethod
    def from_json(cls, rec: dict) -> "SceneObject":
        return cls(rec["color"], rec["shape"], float(rec["size"]),
                   tuple(float(v) for v in rec["world_position"]))


def identity_index(color: str, shape: str) -> int:
    return COLORS.index(color) * len(SHAPES) + SHAPES.index(shape)


def identity_name(k: int) -> str:
    return f"{COLORS[k // len(SHAPES)]} {SHAPES[k % len(SHAPES)]}"


N_IDENTITIES = len(COLORS) * len(SHAPES)


@dataclass(frozen=True)
class Scene:
    scene_id: str
    objects: tuple
    bounds: tuple = ((-BOUNDS, BOUNDS), (-BOUNDS, BOUNDS))

    @property
    def m(self) -> int:
        return len(self.objects)

    @property
    def coords(self) -> np.ndarray:
        return np.array([o.position for o in self.objects], dtype=float).reshape(-1, 3)

    @property
    def names(self) -> list:
        return [o.name for o in self.objects]

    @property
    def identities(self) -> np.ndarray:
        return np.array([o.identity for o in self.objects], dtype=int)

    def to_json(self) -> dict:
        return {"scene_id": self.scene_id,
                "bounds": [list(b) for b in self.bounds],
                "objects": [o.to_json() for o in self.objects]}

    @classmethod
    def from_json(cls, rec: dict) -> "Scene":
        objs = tuple(SceneObject.from_json(r) for r in rec["objects"])
        bounds = tuple(tuple(b) for b in rec.get("bounds", [[-BOUNDS, BOUNDS]] * 2))
        return cls(rec["scene_id"], objs, bounds)


def make_scene(objects: Sequence[SceneObject], suffix: str = "") -> Scene:
    """Wrap objects in a Scene whose id hashes the canonical object record."""
    canon = json.dumps([o.to_json() for o in objects], sort_keys=True,
                       separators=(",", ":"))
    sid = "s_" + hashlib.sha256(canon.encode()).hexdigest()[:12] + suffix
    return Scene(sid, tuple(objects))


@dataclass
class SceneGenConfig:
    min_objects: int = 3
    max_objects: int = 8
    colors: tuple = COLORS
    shapes: tuple = SHAPES
    sizes: tuple = SIZES
    bound: float = BOUNDS
    min_separation: float = MIN_SEPARATION
    max_attempts: int = 2000


def separation(a: SceneObject, b: SceneObject) -> float:
    """Edge-to-edge ground-plane gap between two objects."""
    d = np.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])
    return float(d - a.radius - b.radius)


def sample_scene(config: SceneGenConfig, rng: np.random.Generator) -> Scene:
    """Draw one scene by sequential rejection sampling of positions.

    Raises
    ------
    SceneGenerationError
        If an object cannot be placed within ``config.max_attempts`` draws.
    """
    n = int(rng.integers(config.min_objects, config.max_objects + 1))
    n_id = len(config.colors) * len(config.shapes)
    if n > n_id:
        raise SceneGenerationError(f"{n} objects exceed {n_id} distinct identities")
    ids = rng.choice(n_id, size=n, replace=False)
    objs: list[SceneObject] = []
    for k in ids:
        color = config.colors[k // len(config.shapes)]
        shape = config.shapes[k % len(config.shapes)]
        size = float(config.sizes[rng.integers(len(config.sizes))])
        r = size / 2
        lim = config.bound - r
        for _ in range(config.max_attempts):
            x, y = rng.uniform(-lim, lim, size=2)
            cand = SceneObject(color, shape, size, (float(x), float(y), r))
            if all(separation(cand, o) > config.min_separation for o in objs):
                objs.append(cand)
                break
        else:
            raise SceneGenerationError(
                f"could not place object {len(objs) + 1}/{n} after "
                f"{config.max_attempts} attempts")
    return make_scene(objs)


def sample_scenes(n: int, config: SceneGenConfig | None = None, seed: int = 0) -> list:
    config = config or SceneGenConfig()
    rng = np.random.default_rng(seed)
    return [sample_scene(config, rng) for _ in range(n)]


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraPose:
    eye: tuple
    look_at: tuple
    roll: float = 0.0

    def to_json(self):
        return {"eye": list(map(float, self.eye)),
                "look_at": list(map(float, self.look_at)),
                "roll": float(self.roll)}

    @classmethod
    def from_json(cls, rec):
        return cls(tuple(rec["eye"]), tuple(rec["look_at"]), float(rec["roll"]))

    def ground_frame(self):
        """Unit (right, forward) vectors of the camera projected on the xy-plane."""
        f = np.asarray(self.look_at, float) - np.asarray(self.eye, float)
        f = np.array([f[0], f[1], 0.0])
        nf = np.linalg.norm(f)
        if nf < 1e-12:
            raise ValueError("camera looks straight down; ground frame undefined")
        f /= nf
        r = np.array([f[1], -f[0], 0.0])
        return r, f


@dataclass(frozen=True)
class Trajectory:
    kind: str
    frames: tuple
    fov_deg: float = FOV_DEG

    def to_json(self):
        return {"kind": self.kind, "fov_deg": self.fov_deg,
                "frames": [p.to_json() for p in self.frames]}

    @classmethod
    def from_json(cls, rec):
        return cls(rec["kind"], tuple(CameraPose.from_json(p) for p in rec["frames"]),
                   float(rec.get("fov_deg", FOV_DEG)))


@dataclass
class TrajectoryConfig:
    n_frames: int = N_FRAMES
    fov_deg: float = FOV_DEG
    altitudes: tuple = (3.5, 4.5)
    radii: tuple = (8.0, 9.0)
    arc_deg: float = 180.0
    look_at_z: float = 0.5
    # free6dof jitter amplitudes
    eye_jitter: float = 1.2
    radius_jitter: float = 1.0
    altitude_jitter: float = 0.8
    target_jitter: float = 1.5
    roll_jitter_deg: float = 10.0
    noise_modes: int = 3
    visibility_retries: int = 20
    # person_walk
    walk_height: float = 1.5
    speed_mean: float = 0.5
    speed_amp: float = 0.25
    yaw_drift_deg: float = 25.0
    pitch_deg: float = 12.0
    object_margin: float = 0.6
    bounds_margin: float = 0.3
    walk_retries: int = 40
    step_retries: int = 12


def smooth_noise(n_frames: int, amplitude: float, rng, n_modes: int = 3, dim: int = 1):
    """Sum of random-phase sinusoids, normalised to peak ``amplitude``.

    Returns an array of shape ``(n_frames, dim)``.
    """
    t = np.linspace(0.0, 1.0, n_frames)[:, None, None]
    freqs = np.arange(1, n_modes + 1)[None, :, None]
    phases = rng.uniform(0, 2 * np.pi, size=(1, n_modes, dim))
    weights = rng.uniform(0.5, 1.0, size=(1, n_modes, dim))
    s = (weights * np.sin(2 * np.pi * freqs * t + phases)).sum(axis=1)
    peak = np.abs(s).max(axis=0, keepdims=True)
    peak[peak == 0] = 1.0
    return amplitude * s / peak


def _frustum_visible(pose: CameraPose, points: np.ndarray, fov_deg: float) -> np.ndarray:
    eye = np.asarray(pose.eye, float)
    f = np.asarray(pose.look_at, float) - eye
    f /= np.linalg.norm(f)
    r = np.cross(f, [0.0, 0.0, 1.0])
    if np.linalg.norm(r) < 1e-9:
        r = np.array([1.0, 0.0, 0.0])
    r /= np.linalg.norm(r)
    u = np.cross(r, f)
    rel = points - eye
    z = rel @ f
    t = np.tan(np.deg2rad(fov_deg) / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (rel @ r) / z
        y = (rel @ u) / z
    return (z > 0.05) & (np.abs(x) <= t) & (np.abs(y) <= t)


def _orbit_poses(cfg: TrajectoryConfig, rng):
    alt = float(rng.choice(cfg.altitudes))
    rad = float(rng.choice(cfg.radii))
    phi0 = rng.uniform(0, 2 * np.pi)
    phis = phi0 + np.deg2rad(cfg.arc_deg) * np.linspace(0, 1, cfg.n_frames)
    return alt, rad, phis


def _orbit(scene, cfg, rng):
    alt, rad, phis = _orbit_poses(cfg, rng)
    target = (0.0, 0.0, cfg.look_at_z)
    frames = tuple(CameraPose((rad * np.cos(p), rad * np.sin(p), alt), target, 0.0)
                   for p in phis)
    return Trajectory("orbit", frames, cfg.fov_deg)


def _free6dof(scene, cfg, rng):
    alt, rad, phis = _orbit_poses(cfg, rng)
    T, k = cfg.n_frames, cfg.noise_modes
    pts = scene.coords

    def jitter():
        return (smooth_noise(T, cfg.radius_jitter, rng, k)[:, 0],
                smooth_noise(T, cfg.altitude_jitter, rng, k)[:, 0],
                smooth_noise(T, cfg.eye_jitter, rng, k, dim=3),
                smooth_noise(T, cfg.target_jitter, rng, k, dim=3),
                smooth_noise(T, np.deg2rad(cfg.roll_jitter_deg), rng, k)[:, 0])

    dr, dh, de, dt, droll = jitter()
    frames = []
    for i, p in enumerate(phis):
        pose = None
        for attempt in range(cfg.visibility_retries + 1):
            if attempt:
                # redraw this frame's noise only
                dr2, dh2, de2, dt2, droll2 = jitter()
                dr[i], dh[i], de[i], dt[i], droll[i] = dr2[i], dh2[i], de2[i], dt2[i], droll2[i]
            rr = rad + dr[i]
            eye = np.array([rr * np.cos(p), rr * np.sin(p), alt + dh[i]]) + de[i]
            eye[2] = max(eye[2], 0.5)
            tgt = np.array([0.0, 0.0, cfg.look_at_z]) + dt[i]
            cand = CameraPose(tuple(eye), tuple(tgt), float(droll[i]))
            if len(pts) == 0 or _frustum_visible(cand, pts, cfg.fov_deg).any():
                pose = cand
                break
        if pose is None:
            # fall back to the unjittered orbit pose
            pose = CameraPose((rad * np.cos(p), rad * np.sin(p), alt),
                              (0.0, 0.0, cfg.look_at_z), 0.0)
        frames.append(pose)
    return Trajectory("free6dof", tuple(frames), cfg.fov_deg)


def _walk_ok(xy, scene, cfg):
    lim = BOUNDS - cfg.bounds_margin
    if abs(xy[0]) > lim or abs(xy[1]) > lim:
        return False
    for o in scene.objects:
        if np.hypot(xy[0] - o.position[0], xy[1] - o.position[1]) - o.radius < cfg.object_margin:
            return False
    return True


def _person_walk(scene, cfg, rng):
    T = cfg.n_frames
    lim = BOUNDS - cfg.bounds_margin
    for _ in range(cfg.walk_retries):
        start = None
        for _ in range(200):
            xy = rng.uniform(-lim, lim, size=2)
            if _walk_ok(xy, scene, cfg):
                start = xy
                break
        if start is None:
            continue
        # head roughly towards the room centre so the walk stays in bounds
        yaw = np.arctan2(-start[1], -start[0]) + rng.uniform(-np.pi / 4, np.pi / 4)
        speed = cfg.speed_mean + smooth_noise(T, cfg.speed_amp, rng, cfg.noise_modes)[:, 0]
        pitch = smooth_noise(T, np.deg2rad(cfg.pitch_deg), rng, cfg.noise_modes)[:, 0]
        drift = smooth_noise(T, np.deg2rad(cfg.yaw_drift_deg), rng, cfg.noise_modes)[:, 0]
        pos = [start]
        yaws = [yaw]
        ok = True
        for t in range(1, T):
            step_ok = False
            for attempt in range(cfg.step_retries):
                dy = drift[t] if attempt == 0 else rng.uniform(-1, 1) * np.deg2rad(cfg.yaw_drift_deg)
                y_new = yaws[-1] + dy
                xy = pos[-1] + speed[t] * np.array([np.cos(y_new), np.sin(y_new)])
                if _walk_ok(xy, scene, cfg):
                    step_ok = True
                    break
            if not step_ok:
                ok = False
                break
            pos.append(xy)
            yaws.append(y_new)
        if not ok:
            continue
        frames = []
        for t in range(T):
            eye = np.array([pos[t][0], pos[t][1], cfg.walk_height])
            d = np.array([np.cos(yaws[t]) * np.cos(pitch[t]),
                          np.sin(yaws[t]) * np.cos(pitch[t]),
                          np.sin(pitch[t])])
            frames.append(CameraPose(tuple(eye), tuple(eye + d), 0.0))
        return Trajectory("person_walk", tuple(frames), cfg.fov_deg)
    raise SceneGenerationError(
        f"person_walk: no collision-free walk after {cfg.walk_retries} retries")


TRAJECTORY_KINDS = ("orbit", "free6dof", "person_walk")


def generate_trajectory(kind: str, scene: Scene, rng, config: TrajectoryConfig | None = None
                        ) -> Trajectory:
    """Sample a camera trajectory of the given regime for ``scene``."""
    cfg = config or TrajectoryConfig()
    if kind == "orbit":
        return _orbit(scene, cfg, rng)
    if kind == "free6dof":
        return _free6dof(scene, cfg, rng)
    if kind == "person_walk":
        return _person_walk(scene, cfg, rng)
    raise ValueError(f"unknown trajectory kind {kind!r}")


# ---------------------------------------------------------------------------
# QA
# ---------------------------------------------------------------------------

@dataclass
class QAItem:
    scene_id: str
    question: str
    answer: str
    kind: str
    object_names: list
    object_coords: list
    # not serialised: slot indices and the geometric relation
    object_indices: list = field(default_factory=list, compare=False)
    relation: str | None = field(default=None, compare=False)

    def to_json(self):
        return {"scene_id": self.scene_id, "image_path": None,
                "question": self.question, "answer": self.answer, "kind": self.kind,
                "object_names": list(self.object_names),
                "object_coords": [[float(v) for v in c] for c in self.object_coords]}

    @classmethod
    def from_json(cls, rec):
        return cls(rec["scene_id"], rec["question"], rec["answer"], rec["kind"],
                   list(rec["object_names"]), [list(c) for c in rec["object_coords"]])


@dataclass(frozen=True)
class QuestionSpec:
    """Scene-independent question template over object slots."""
    kind: str
    indices: tuple
    relation: str | None = None


TIE_EPS = 1e-9


def relation_direction(relation: str, right, forward):
    """Ground vector ``g`` such that "A rel B" holds iff ``g @ (x_B - x_A) > 0``."""
    if relation == "left of":
        return right
    if relation == "right of":
        return -right
    if relation == "in front of":
        return forward
    if relation == "behind":
        return -forward
    raise ValueError(relation)


def answer_question(spec: QuestionSpec, coords, pose: CameraPose):
    """Ground-truth answer string key, or ``None`` for a tie.

    Relative questions answer ``"yes"``/``"no"``; distance questions answer the
    slot index (0 or 1) of the closer candidate.
    """
    X = np.asarray(coords, float)
    if spec.kind == REL_KIND:
        a, b = spec.indices
        r, f = pose.ground_frame()
        g = relation_direction(spec.relation, r, f)
        s = float(g @ (X[b] - X[a]))
        if abs(s) <= TIE_EPS:
            return None
        return "yes" if s > 0 else "no"
    ref, a, b = spec.indices
    da = np.linalg.norm(X[a] - X[ref])
    db = np.linalg.norm(X[b] - X[ref])
    if abs(da - db) <= TIE_EPS:
        return None
    return 0 if da < db else 1


def render_question(spec: QuestionSpec, names):
    if spec.kind == REL_KIND:
        a, b = spec.indices
        return f"Is the {names[a]} {spec.relation} the {names[b]}?"
    ref, a, b = spec.indices
    return f"Which is closer to the {names[ref]}, the {names[a]} or the {names[b]}?"


def realize_question(spec: QuestionSpec, scene: Scene, pose: CameraPose):
    """Instantiate ``spec`` on ``scene``; ``None`` when the answer is a tie."""
    ans = answer_question(spec, scene.coords, pose)
    if ans is None:
        return None
    names = scene.names
    if spec.kind == DIST_KIND:
        ans = names[spec.indices[1 + ans]]
    idx = list(spec.indices)
    return QAItem(scene.scene_id, render_question(spec, names), ans, spec.kind,
                  [names[i] for i in idx], [list(scene.objects[i].position) for i in idx],
                  idx, spec.relation)


def sample_question_spec(m: int, rng, kinds=(REL_KIND, DIST_KIND)) -> QuestionSpec:
    kinds = [k for k in kinds if (k == REL_KIND and m >= 2) or (k == DIST_KIND and m >= 3)]
    if not kinds:
        raise ValueError(f"scene with {m} objects supports no requested question kind")
    kind = kinds[rng.integers(len(kinds))]
    if kind == REL_KIND:
        idx = tuple(int(i) for i in rng.choice(m, 2, replace=False))
        return QuestionSpec(kind, idx, RELATIONS[rng.integers(len(RELATIONS))])
    return QuestionSpec(kind, tuple(int(i) for i in rng.choice(m, 3, replace=False)))


def generate_qa(scene: Scene, trajectory: Trajectory, n: int = 5, rng=None,
                kinds=(REL_KIND, DIST_KIND), max_tries: int = 200) -> list:
    """Sample ``n`` spatial questions about ``scene``.

    Relative-position questions are posed in the ground frame of the first
    camera pose.  Tied configurations are skipped and redrawn.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if DIST_KIND in kinds and REL_KIND not in kinds and scene.m < 3:
        raise ValueError("distance-order questions need at least 3 objects")
    if scene.m < 2:
        raise ValueError("spatial questions need at least 2 objects")
    pose = trajectory.frames[0]
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries * max(n, 1):
            raise SceneGenerationError("too many tied questions")
        item = realize_question(sample_question_spec(scene.m, rng, kinds), scene, pose)
        if item is not None:
            out.append(item)
    return out


# ---------------------------------------------------------------------------
# counterfactuals
# ---------------------------------------------------------------------------

def random_derangement(n: int, rng, accept=None, max_attempts: int = 10000):
    """Uniform fixed-point-free permutation by rejection, optionally filtered."""
    if n < 2:
        raise ValueError("no derangement of fewer than 2 elements")
    for _ in range(max_attempts):
        p = rng.permutation(n)
        if np.any(p == np.arange(n)):
            continue
        if accept is None or accept(p):
            return p
    raise SceneGenerationError("no acceptable derangement found")


def make_counterfactual(scene: Scene, kind: str, rng, min_separation=MIN_SEPARATION) -> Scene:
    """Permute one factor of a scene by a derangement, holding the other fixed.

    ``color_swap`` reassigns colours so that no object keeps its colour and
    identities stay unique; ``position_swap`` moves every object to another
    object's ground position (its height stays its own radius) while keeping
    the separation invariant.
    """
    objs = scene.objects
    m = len(objs)
    if kind == "color_swap":
        colors = [o.color for o in objs]
        if len(set(colors)) < 2:
            raise SceneGenerationError("no colour derangement: all objects share one colour")

        def ok(p):
            new = [colors[j] for j in p]
            if any(new[i] == colors[i] for i in range(m)):
                return False
            return len({(new[i], objs[i].shape) for i in range(m)}) == m

        p = random_derangement(m, rng, ok)
        new_objs = [replace(o, color=colors[p[i]]) for i, o in enumerate(objs)]
    elif kind == "position_swap":
        if m < 2:
            raise SceneGenerationError("position swap needs at least 2 objects")

        def moved(p):
            return [replace(o, position=(objs[p[i]].position[0], objs[p[i]].position[1], o.radius))
                    for i, o in enumerate(objs)]

        def ok(p):
            new = moved(p)
            return all(separation(new[i], new[j]) > min_separation
                       for i in range(m) for j in range(i + 1, m))

        p = random_derangement(m, rng, ok)
        new_objs = moved(p)
    else:
        raise ValueError(f"unknown counterfactual kind {kind!r}")
    suffix = "_cs" if kind == "color_swap" else "_ps"
    return Scene(scene.scene_id + suffix, tuple(new_objs), scene.bounds)


# ---------------------------------------------------------------------------
# dataset I/O
# ---------------------------------------------------------------------------

def scene_disjoint_split(row_counts: Sequence[int], ratio: float, rng) -> np.ndarray:
    """Boolean train mask over scenes whose row total is closest to ``ratio``.

    Scenes are visited in a random order; an exact subset-sum search picks
    the subset whose row count is nearest ``round(ratio * total)``.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must lie in (0, 1)")
    counts = np.asarray(row_counts, dtype=int)
    n = len(counts)
    if n == 0:
        return np.zeros(0, bool)
    if n == 1:
        return np.array([ratio >= 0.5])
    order = rng.permutation(n)
    total = int(counts.sum())
    target = int(round(ratio * total))
    reach = np.zeros((n + 1, total + 1), bool)
    reach[0, 0] = True
    for i, s in enumerate(order):
        c = counts[s]
        reach[i + 1] = reach[i]
        reach[i + 1, c:] |= reach[i, :total + 1 - c]
    sums = np.nonzero(reach[n])[0]
    best = int(sums[np.argmin(np.abs(sums - target))])
    mask = np.zeros(n, bool)
    cur = best
    for i in range(n, 0, -1):
        s = order[i - 1]
        if not reach[i - 1, cur]:
            mask[s] = True
            cur -= counts[s]
    return mask


def write_dataset(scenes, qa, split_ratio, path, trajectories=None, seed=0, extra=None) -> dict:
    """Write scenes, trajectories and scene-disjoint train/val JSONL splits.

    Returns the manifest dict (also written as ``manifest.json``).
    """
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate scene_id in dataset")
    os.makedirs(path, exist_ok=True)
    by_scene = {sid: [] for sid in ids}
    for item in qa:
        if item.scene_id not in by_scene:
            raise ValueError(f"QA item refers to unknown scene {item.scene_id}")
        by_scene[item.scene_id].append(item)
    rng = np.random.default_rng(seed)
    mask = scene_disjoint_split([len(by_scene[s]) for s in ids], split_ratio, rng)
    sdir = os.path.join(path, "scenes")
    os.makedirs(sdir, exist_ok=True)
    for i, s in enumerate(scenes):
        with open(os.path.join(sdir, f"{s.scene_id}.json"), "w") as fh:
            rec = s.to_json()
            if trajectories is not None:
                rec["trajectory"] = trajectories[i].to_json()
            json.dump(rec, fh, indent=1, sort_keys=True)
    n_rows = {}
    for name, keep in (("train", True), ("val", False)):
        rows = 0
        with open(os.path.join(path, f"{name}.jsonl"), "w") as fh:
            for i, sid in enumerate(ids):
                if mask[i] != keep:
                    continue
                for item in by_scene[sid]:
                    fh.write(json.dumps(item.to_json(), sort_keys=True) + "\n")
                    rows += 1
        n_rows[name] = rows
    manifest = {
        "n_scenes": len(scenes),
        "scene_ids": ids,
        "train_scenes": [sid for sid, k in zip(ids, mask) if k],
        "val_scenes": [sid for sid, k in zip(ids, mask) if not k],
        "rows": n_rows,
        "split_ratio": split_ratio,
        "seed": seed,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [QAItem.from_json(json.loads(line)) for line in fh if line.strip()]


def read_dataset(path):
    """Load ``(scenes, trajectories, train_qa, val_qa)`` written by :func:`write_dataset`."""
    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)
    scenes, trajs = [], []
    for sid in manifest["scene_ids"]:
        with open(os.path.join(path, "scenes", f"{sid}.json")) as fh:
            rec = json.load(fh)
        scenes.append(Scene.from_json(rec))
        trajs.append(Trajectory.from_json(rec["trajectory"]) if "trajectory" in rec else None)
    return (scenes, trajs, read_jsonl(os.path.join(path, "train.jsonl")),
            read_jsonl(os.path.join(path, "val.jsonl")))


def generate_corpus(n_scenes: int, traj_kind: str = "orbit", n_questions: int = 5,
                    seed: int = 0, scene_config: SceneGenConfig | None = None,
                    traj_config: TrajectoryConfig | None = None):
    """Scenes, one trajectory per scene and their QA items, from a single seed."""
    rng = np.random.default_rng(seed)
    scene_config = scene_config or SceneGenConfig()
    scenes, trajs, qa = [], [], []
    for _ in range(n_scenes):
        for _ in range(50):
            s = sample_scene(scene_config, rng)
            try:
                t = generate_trajectory(traj_kind, s, rng, traj_config)
            except SceneGenerationError:
                continue
            break
        else:
            raise SceneGenerationError("could not find a scene admitting the trajectory")
        scenes.append(s)
        trajs.append(t)
        if n_questions:
            qa.extend(generate_qa(s, t, n_questions, rng))
    return scenes, trajs, qa
