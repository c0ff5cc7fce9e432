"""Command-line pipeline: data generation through sweeps, with replayable manifests.

Every command writes into ``<out>/<command>/`` a set of CSV tables, binary
artifacts and ``manifest.json`` holding the fully resolved configuration,
the SHA-256 of every input and output, and the command line.  ``<out>``
defaults to ``$SCENETOPO_OUT`` and then ``./scenetopo_out``.  Commands are
also appended to ``<out>/pipeline.json`` so ``scenetopo replay
<out>/pipeline.json --out other`` re-runs the whole chain.

Exit codes: 0 success, 2 usage error, 3 malformed config or rejected value, 4 missing upstream
artifact, 5 a requested check failed.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, defaults_help, parse_floats
from .reports import read_csv, svg_bars, svg_lines, svg_scatter, write_csv

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_MISSING, EXIT_CHECK = 0, 2, 3, 4, 5
ENV_OUT = "SCENETOPO_OUT"
COMMANDS = ("gen-data", "emulate", "fit-basis", "extract", "spectral-verify", "probe",
            "counterfactual", "steer", "train", "sweep", "report")


class MissingArtifact(RuntimeError):
    pass


class CheckFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """One command invocation: paths, config and the manifest being built."""

    def __init__(self, command, cfg: RunConfig, out_root, argv):
        self.command = command
        self.cfg = cfg
        self.root = os.path.abspath(out_root)
        self.dir = os.path.join(self.root, command)
        self.argv = list(argv)
        self.inputs, self.outputs, self.checks = [], [], []
        self.extra = {}
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def need(self, command, name):
        p = os.path.join(self.root, command, name)
        if not os.path.exists(p):
            raise MissingArtifact(f"missing upstream artifact {os.path.relpath(p, self.root)}; "
                                  f"run `scenetopo {command}` first")
        self.inputs.append(p)
        return p

    def output(self, name):
        p = self.path(name)
        self.outputs.append(p)
        return p

    def csv(self, name, rows, columns=None):
        write_csv(self.output(name), rows, columns)

    def check(self, name, statistic, threshold, passed):
        self.checks.append({"check_name": name, "statistic": float(statistic),
                            "threshold": threshold, "pass": bool(passed)})

    def _files(self, paths):
        rec = {}
        for p in paths:
            if os.path.isdir(p):
                for dp, _, fs in os.walk(p):
                    for f in sorted(fs):
                        q = os.path.join(dp, f)
                        rec[os.path.relpath(q, self.root)] = _sha256(q)
            else:
                rec[os.path.relpath(p, self.root)] = _sha256(p)
        return dict(sorted(rec.items()))

    def finish(self):
        if self.checks:
            self.csv("checks.csv", self.checks, ["check_name", "statistic", "threshold", "pass"])
        manifest = {"command": self.command, "version": __version__, "seed": self.cfg.seed,
                    "config": self.cfg.to_dict(), "argv": self.argv,
                    "inputs": self._files(self.inputs), "outputs": self._files(self.outputs),
                    "checks": self.checks, **self.extra}
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        pipe = os.path.join(self.root, "pipeline.json")
        steps = []
        if os.path.exists(pipe):
            with open(pipe) as fh:
                steps = json.load(fh)["steps"]
        rel = os.path.relpath(self.path("manifest.json"), self.root)
        steps = [s for s in steps if s != rel] + [rel]
        with open(pipe, "w") as fh:
            json.dump({"steps": steps}, fh, indent=1)
        failed = [c["check_name"] for c in self.checks if not c["pass"]]
        if failed:
            raise CheckFailed("failed checks: " + ", ".join(failed))


def _emulator_params(cfg):
    from .emulator import make_emulator_params
    e = cfg["emulator"]
    return make_emulator_params(d=e["d"], identity_share=e["identity_share"],
                                spatial_share=e["spatial_share"], noise_sigma=e["noise_sigma"],
                                seed=cfg.seed)


def _load_dataset(run):
    from .scene_gen import read_dataset
    run.need("gen-data", "dataset/manifest.json")
    return read_dataset(os.path.join(run.root, "gen-data", "dataset"))


def _load_corpus(run):
    p = run.need("emulate", "corpus.npz")
    with np.load(p) as z:
        return {k: z[k] for k in z.files}


def _load_basis(run):
    from .extraction import IdentityBasis
    return IdentityBasis.load(run.need("fit-basis", "basis.npz"))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(run):
    from .scene_gen import SceneGenConfig, generate_corpus, write_dataset
    g = run.cfg["scene-gen"]
    sc = SceneGenConfig(min_objects=g["min_objects"], max_objects=g["max_objects"])
    scenes, trajs, qa = generate_corpus(g["n_scenes"], g["traj_kind"], g["n_questions"],
                                        seed=run.cfg.seed, scene_config=sc)
    ds = run.output("dataset")
    man = write_dataset(scenes, qa, g["split_ratio"], ds, trajs, seed=run.cfg.seed)
    run.csv("scenes.csv", [{"scene_id": s.scene_id, "m": s.m,
                            "split": "train" if s.scene_id in set(man["train_scenes"]) else "val"}
                           for s in scenes], ["scene_id", "m", "split"])


def cmd_emulate(run):
    from .emulator import build_corpus_activations, stack_corpus
    from .extraction import variance_subspace_fraction
    scenes, trajs, _, _ = _load_dataset(run)
    e = run.cfg["emulator"]
    params = _emulator_params(run.cfg)
    corpus = build_corpus_activations(scenes, params, run.cfg.seed, e["mode"], trajs,
                                      e["kappa"], e["tau_slot"], supersample=e["supersample"])
    H, X, ids, sidx = stack_corpus(corpus, scenes)
    if len(H) == 0:
        H = np.zeros((0, params.d))
    np.savez(run.output("corpus.npz"), H=H, X=X, identities=ids, scene_index=sidx,
             scene_ids=np.array([s.scene_id for s in scenes]),
             colors=ids // 3 if len(ids) else ids, shapes=ids % 3 if len(ids) else ids)
    rows = []
    if len(H):
        rows = [{"quantity": "identity_share",
                 "value": variance_subspace_fraction(H, params.identity_basis)},
                {"quantity": "spatial_share",
                 "value": variance_subspace_fraction(H, params.spatial_basis)},
                {"quantity": "n_objects", "value": int(len(H))}]
    run.csv("summary.csv", rows, ["quantity", "value"])


def cmd_fit_basis(run):
    from .extraction import cross_scene_prototypes, identity_basis_logistic_qr, identity_basis_svd
    c = _load_corpus(run)
    x = run.cfg["extraction"]
    H, ids = c["H"], c["identities"]
    if len(H) == 0:
        raise MissingArtifact("emulated corpus is empty; nothing to fit")
    if x["method"] == "svd":
        present, lab = np.unique(ids, return_inverse=True)
        protos = cross_scene_prototypes(H, lab, len(present))
        basis = identity_basis_svd(protos, min(x["k"], len(present)))
    elif x["method"] == "logistic":
        basis = identity_basis_logistic_qr(H, c["colors"], c["shapes"])
    else:
        raise ConfigError(f"unknown extraction method {x['method']!r}")
    basis.save(run.output("basis.npz"))
    sv = basis.singular_values if basis.singular_values is not None else []
    run.csv("basis.csv", [{"index": i, "singular_value": float(v)} for i, v in enumerate(sv)],
            ["index", "singular_value"])


def cmd_extract(run):
    from .extraction import pca_embed, procrustes_correlation, residualize, rsa
    from .spectral import normalized_dirichlet_ratio
    c = _load_corpus(run)
    basis = _load_basis(run)
    H, X, sidx = c["H"], c["X"], c["scene_index"]
    Ht = residualize(H, basis)
    n_comp = run.cfg["extraction"]["n_components"]
    pe_raw, pe_res = pca_embed(H, n_comp), pca_embed(Ht, n_comp)
    scenes = [s for s in np.unique(sidx)]
    Hs = [H[sidx == s] for s in scenes]
    Hts = [Ht[sidx == s] for s in scenes]
    Xs = [X[sidx == s] for s in scenes]
    rsa_raw, rsa_res = rsa(Hs, Xs), rsa(Hts, Xs)
    ratios = []
    for s, h, ht, x in zip(scenes, Hs, Hts, Xs):
        if len(x) >= 2:
            ratios.append({"scene": int(s), "ratio_raw": normalized_dirichlet_ratio(h, x),
                           "ratio_residualized": normalized_dirichlet_ratio(ht, x)})
    run.csv("ratios.csv", ratios, ["scene", "ratio_raw", "ratio_residualized"])
    run.csv("summary.csv", [
        {"quantity": "procrustes_raw", "value": procrustes_correlation(pe_raw.Z, X)},
        {"quantity": "procrustes_residualized", "value": procrustes_correlation(pe_res.Z, X)},
        {"quantity": "rsa_raw", "value": rsa_raw.mean},
        {"quantity": "rsa_residualized", "value": rsa_res.mean},
        {"quantity": "mean_ratio_raw", "value": float(np.mean([r["ratio_raw"] for r in ratios]))},
        {"quantity": "mean_ratio_residualized",
         "value": float(np.mean([r["ratio_residualized"] for r in ratios]))},
    ], ["quantity", "value"])
    cols = ["scene", "x", "y", "z"] + [f"pc{i + 1}" for i in range(pe_res.Z.shape[1])]
    run.csv("embedding.csv", [dict(zip(cols, [int(s), *x, *z]))
                              for s, x, z in zip(sidx, X, pe_res.Z)], cols)


def cmd_spectral_verify(run):
    from .spectral import cube_suite, kyfan_suite, theorem1_suite
    v = run.cfg["spectral-verify"]
    rng = np.random.default_rng(run.cfg.seed)
    recs = theorem1_suite(v["theorem1_scenes"], v["theorem1_m"], parse_floats(v["epsilons"]),
                          n_perturb=v["n_perturb"], rng=rng)
    recs.append(kyfan_suite(v["kyfan_graphs"], v["kyfan_m"], n_trials=v["kyfan_trials"],
                            rng=rng))
    cube_rng = np.random.default_rng(v["cube_seed"] if v["cube_seed"] >= 0 else run.cfg.seed)
    cube_recs, cube = cube_suite(v["cube_m"], v["cube_tau"], cube_rng, v["eig_method"])
    recs.extend(cube_recs)
    for r in recs:
        run.check(r.check_name, r.statistic, r.threshold, r.passed)
    groups = {"theorem1": [r for r in recs if r.check_name.startswith("theorem1")],
              "kyfan": [r for r in recs if r.check_name == "kyfan"],
              "cube": cube_recs}
    run.csv("summary.csv", [{"check": k, "status": "pass" if all(r.passed for r in g) else "fail"}
                            for k, g in groups.items()], ["check", "status"])
    run.csv("cube.csv", [{"quantity": f"cosine_{i}", "value": float(c)}
                         for i, c in enumerate(cube["principal_angle_cosines"])]
            + [{"quantity": f"lambda_{i + 1}", "value": float(l)}
               for i, l in enumerate(cube["eigenvalues"])], ["quantity", "value"])


def cmd_probe(run):
    from .extraction import residualize
    from .probes import cross_validated_probe_suite
    c = _load_corpus(run)
    p = run.cfg["probe"]
    H = c["H"]
    rows = []
    variants = [("raw", H)]
    basis_path = os.path.join(run.root, "fit-basis", "basis.npz")
    if os.path.exists(basis_path):
        variants.append(("residualized", residualize(H, _load_basis(run))))
    for name, Hv in variants:
        rep = cross_validated_probe_suite(Hv, c["X"], c["colors"], c["shapes"], c["scene_index"],
                                          p["folds"], np.random.default_rng(run.cfg.seed),
                                          p["knn_k"], p["ridge_alpha"])
        rows += [{"features": name, **r} for r in rep.rows()]
    run.csv("probes.csv", rows, ["features", "target", "mean", "ci"])


def cmd_steer(run):
    from .probes import build_steering_pair, ridge_fit, steering_experiment
    c = _load_corpus(run)
    s = run.cfg["steer"]
    rng = np.random.default_rng(run.cfg.seed)
    probe = ridge_fit(c["H"], c["X"], run.cfg["probe"]["ridge_alpha"])
    pair = build_steering_pair(probe, s["axis"], rng)
    rep = steering_experiment(c["H"], probe, pair, parse_floats(s["alphas"]),
                              s["trials_per_cell"], s["noise_sigma"], rng)
    run.csv("trials.csv", rep.records, ["direction", "alpha", "trial", "dx", "dy", "dz"])
    run.csv("welch.csv", [{"alpha": a, "t": w.t, "p": w.p, "dof": w.dof, "status": w.status}
                          for a, w in sorted(rep.welch.items())],
            ["alpha", "t", "p", "dof", "status"])
    ax, nu = rep.sign_rate("axis"), rep.sign_rate("null")
    run.check("steer_axis_sign_rate", ax, 0.95, ax >= 0.95)
    run.check("steer_null_sign_rate", nu, "[0.4,0.6]", 0.4 <= nu <= 0.6)


def cmd_counterfactual(run):
    from .emulator import build_corpus_activations, stack_corpus
    from .extraction import cross_scene_prototypes, identity_basis_svd
    from .probes import (CoordinateHead, build_counterfactual_sets, emulator_readout,
                         flip_rate_eval)
    from .scene_gen import generate_corpus
    scenes, trajs, _, _ = _load_dataset(run)
    cf = run.cfg["counterfactual"]
    seed = run.cfg.seed
    params = _emulator_params(run.cfg)
    # heads and basis come from a separate, larger corpus drawn from the same world
    bscenes, _, _ = generate_corpus(cf["basis_scenes"], "orbit", 0, seed=seed + 1)
    corp = build_corpus_activations(bscenes, params, seed + 1)
    H, X, ids, _ = stack_corpus(corp, bscenes)
    present, lab = np.unique(ids, return_inverse=True)
    basis = identity_basis_svd(cross_scene_prototypes(H, lab, len(present)),
                               min(run.cfg["extraction"]["k"], len(present)))
    heads = {"raw": CoordinateHead.fit(H, X), "residualized": CoordinateHead.fit(H, X, basis)}
    n = min(cf["eval_scenes"], len(scenes))
    sets = build_counterfactual_sets(scenes[:n], trajs[:n], np.random.default_rng(seed + 2),
                                     cf["n_questions"])
    rows = []
    for name, head in heads.items():
        rep = flip_rate_eval(emulator_readout(head, params, seed + 3), sets)
        rows += [{"readout": name, **r} for r in rep.rows()]
    run.csv("flips.csv", rows, ["readout", "variant", "kind", "flip_rate", "flips", "n"])


def _task_train_configs(cfg):
    from .trainer import TaskConfig, TrainConfig
    t = cfg["train"]
    task = TaskConfig(d=t["d"], n_train=t["n_train"], n_val=t["n_val"],
                      noise_sigma=t["noise_sigma"], spatial_scale=t["spatial_scale"],
                      kappa=t["kappa"], fiedler_scale=t["fiedler_scale"])
    tr = TrainConfig(lam=t["lam"], steps=t["steps"], lr=t["lr"], momentum=t["momentum"],
                     batch=t["batch"], seed=cfg.seed, n_layers=t["n_layers"])
    return task, tr


def cmd_train(run):
    from .trainer import make_task, train
    task_cfg, tr = _task_train_configs(run.cfg)
    res = train(make_task(task_cfg, run.cfg.seed), tr)
    run.csv("trace.csv", res.trace, ["step", "ce", "ratio", "total", "val_acc"])
    run.csv("summary.csv", [{"lambda": tr.lam, "final_val_acc": res.final_val_acc,
                             "final_ratio": res.final_ratio, "final_val_ce": res.final_val_ce,
                             "diverged": res.diverged}],
            ["lambda", "final_val_acc", "final_ratio", "final_val_ce", "diverged"])
    np.save(run.output("theta.npy"), res.model.theta)
    run.check("train_not_diverged", float(res.diverged), 0, not res.diverged)


def cmd_sweep(run):
    from .trainer import lambda_sweep
    task_cfg, tr = _task_train_configs(run.cfg)
    sw = run.cfg["sweep"]
    seeds = [run.cfg.seed + i for i in range(sw["n_seeds"])]
    rep = lambda_sweep(parse_floats(sw["lambdas"]), task_config=task_cfg, train_config=tr,
                       seeds=seeds, jobs=sw["jobs"])
    run.csv("sweep.csv", rep.rows(), ["lambda", "seed", "final_val_acc", "final_ratio"])
    run.csv("summary.csv", [{"lambda": l, "mean_val_acc": rep.mean[l], "ci": rep.ci[l]}
                            for l in rep.lambdas], ["lambda", "mean_val_acc", "ci"])
    if rep.rise is not None:
        nz = max(l for l in rep.lambdas if l != 0)
        run.check("sweep_rise", rep.mean[rep.best_lambda] - rep.mean[0.0], 0, rep.rise)
        run.check("sweep_fall", rep.mean[nz] - rep.mean[0.0], 0, rep.fall)


def cmd_report(run):
    found = []
    emb = os.path.join(run.root, "extract", "embedding.csv")
    if os.path.exists(emb):
        run.inputs.append(emb)
        rows = read_csv(emb)
        pc1 = [float(r["pc1"]) for r in rows]
        pc2 = [float(r["pc2"]) for r in rows]
        for ax in ("x", "y"):
            svg_scatter(run.output(f"pca_embedding_{ax}.svg"), pc1, pc2,
                        [float(r[ax]) for r in rows],
                        title=f"Residualised PCA, coloured by true {ax}",
                        xlabel="PC1", ylabel="PC2")
        found.append("extract")
    rat = os.path.join(run.root, "extract", "ratios.csv")
    if os.path.exists(rat):
        run.inputs.append(rat)
        rows = read_csv(rat)
        vals = {k: np.array([float(r[k]) for r in rows]) for k in ("ratio_raw",
                                                                    "ratio_residualized")}
        se = [2 * v.std(ddof=1) / np.sqrt(len(v)) if len(v) > 1 else 0.0 for v in vals.values()]
        svg_bars(run.output("dirichlet_ratio.svg"), ["raw", "residualised"],
                 [v.mean() for v in vals.values()], se, title="Normalised Dirichlet ratio",
                 ylabel="ratio")
    sw = os.path.join(run.root, "sweep", "summary.csv")
    if os.path.exists(sw):
        run.inputs.append(sw)
        rows = read_csv(sw)
        lam = [float(r["lambda"]) for r in rows]
        svg_lines(run.output("lambda_sweep.svg"),
                  {"val accuracy": (list(range(len(lam))), [float(r["mean_val_acc"]) for r in rows],
                                    [float(r["ci"]) for r in rows])},
                  title="Validation accuracy vs lambda (index: " + ", ".join(f"{l:g}" for l in lam)
                  + ")", xlabel="lambda index", ylabel="accuracy")
        found.append("sweep")
    tables = []
    for cmd in COMMANDS:
        if cmd == "report":
            continue
        d = os.path.join(run.root, cmd)
        if not os.path.isdir(d):
            continue
        for f in sorted(os.listdir(d)):
            if f.endswith(".csv") and f in ("summary.csv", "checks.csv", "probes.csv",
                                            "flips.csv"):
                p = os.path.join(d, f)
                run.inputs.append(p)
                for r in read_csv(p):
                    tables.append({"command": cmd, "table": f,
                                   "row": json.dumps(r, sort_keys=True)})
                found.append(cmd)
    if not found:
        raise MissingArtifact("no upstream outputs to report on")
    run.csv("report.csv", tables, ["command", "table", "row"])


HANDLERS = {"gen-data": cmd_gen_data, "emulate": cmd_emulate, "fit-basis": cmd_fit_basis,
            "extract": cmd_extract, "spectral-verify": cmd_spectral_verify, "probe": cmd_probe,
            "counterfactual": cmd_counterfactual, "steer": cmd_steer, "train": cmd_train,
            "sweep": cmd_sweep, "report": cmd_report}

# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(
        prog="scenetopo", formatter_class=argparse.RawDescriptionHelpFormatter,
        description=__doc__.split("\n\n")[0],
        epilog="configuration keys and defaults:\n" + defaults_help())
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [section] key = value lines")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--out", help=f"output root (default ${ENV_OUT} or ./scenetopo_out)")
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=f"run {name}")
        if name == "gen-data":
            sp.add_argument("--scenes", type=int, help="number of scenes")
        if name == "train":
            sp.add_argument("--lam", type=float, help="regulariser weight")
        if name == "sweep":
            sp.add_argument("--jobs", type=int, help="worker processes")
    rp = sub.add_parser("replay", help="re-run from a command manifest or pipeline.json")
    rp.add_argument("manifest")
    rp.add_argument("--out", help="output root for the replay (default: original root)")
    return p


def _resolve_config(args):
    cfg = RunConfig()
    if args.config:
        cfg.read_file(args.config)
    for s in args.set:
        cfg.apply_override(s)
    if args.seed is not None:
        cfg.set("global", "seed", args.seed)
    if getattr(args, "scenes", None) is not None:
        cfg.set("scene-gen", "n_scenes", args.scenes)
    if getattr(args, "lam", None) is not None:
        cfg.set("train", "lam", args.lam)
    if getattr(args, "jobs", None) is not None:
        cfg.set("sweep", "jobs", args.jobs)
    return cfg


def run_command(command, cfg: RunConfig, out_root, argv=()):
    run = Run(command, cfg, out_root, argv)
    HANDLERS[command](run)
    run.finish()
    return run


def _replay(path, out):
    with open(path) as fh:
        rec = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    if "steps" in rec:
        manifests = [os.path.join(base, s) for s in rec["steps"]]
        root = base
    else:
        manifests = [path]
        root = os.path.dirname(base)
    out = out or root
    failed = []
    for m in manifests:
        if not os.path.exists(m):
            raise MissingArtifact(f"manifest {m} not found")
        with open(m) as fh:
            man = json.load(fh)
        try:
            run_command(man["command"], RunConfig(man["config"]), out, man.get("argv", []))
        except CheckFailed as e:
            failed.append(f"{man['command']}: {e}")
    if failed:
        raise CheckFailed("; ".join(failed))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("scenetopo: error: a command is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "replay":
            if not os.path.exists(args.manifest):
                raise MissingArtifact(f"manifest {args.manifest} not found")
            _replay(args.manifest, args.out)
            return EXIT_OK
        cfg = _resolve_config(args)
        out = args.out or os.environ.get(ENV_OUT) or "scenetopo_out"
        run_command(args.command, cfg, out, argv)
    except ConfigError as e:
        print(f"scenetopo: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:  # a configured value the library rejects
        print(f"scenetopo: invalid configuration value: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as e:
        print(f"scenetopo: {e}", file=sys.stderr)
        return EXIT_MISSING
    except CheckFailed as e:
        print(f"scenetopo: {e}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
