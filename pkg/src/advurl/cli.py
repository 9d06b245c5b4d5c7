"""``advurl`` command line.

Config file (JSON, every key optional)::

    {
      "seed": 0,
      "today": "2024-01-01",
      "providers": {"mode": "replay", "fixtures": "out/fixtures"},
      "synth": {"n_per_class": 500, "datasets": 1},
      "model": {"kind": "regularized_boost", "params": {}},
      "eval": {"folds": 10, "kinds": ["random_forest", "adaboost", "gradient_boost", "regularized_boost"]},
      "cluster": {"k_min": 1, "k_max": 9, "restarts": 10},
      "attack": {"rho": 0.0, "probe_k": 0.1, "step_h": 0.2, "budget_K": 1000, "box_delta": 3.0,
                 "max_samples": 200, "train_fraction": 0.7}
    }

Flags override the file. Each command writes its outputs plus
``config.resolved.json`` and ``manifest.json`` into ``--out``. Failures
print one JSON line ``{"error": <kind>, "message": ...}`` to stderr and exit
with status 2.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import AdvUrlError, ConfigInvalid, InputMissing
from .seeding import derive_seed

DEFAULT_CONFIG = {
    "seed": 0,
    "today": "2024-01-01",
    "providers": {"mode": "replay", "fixtures": None},
    "synth": {"n_per_class": 500, "datasets": 1},
    "model": {"kind": "regularized_boost", "params": {}},
    "eval": {"folds": 10, "kinds": ["random_forest", "adaboost", "gradient_boost", "regularized_boost"]},
    "cluster": {"k_min": 1, "k_max": 9, "restarts": 10},
    "attack": {"rho": 0.0, "probe_k": 0.1, "step_h": 0.2, "budget_K": 1000, "box_delta": 3.0,
               "max_samples": 200, "train_fraction": 0.7},
}

_TYPES = {"seed": int, "today": str, "providers": dict, "synth": dict, "model": dict, "eval": dict,
          "cluster": dict, "attack": dict}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None) -> dict:
    doc = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise InputMissing(f"config file {p} not found")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigInvalid("config must be a JSON object")
    for k, v in doc.items():
        if k not in _TYPES:
            raise ConfigInvalid(f"unknown config key {k!r}")
        if not isinstance(v, _TYPES[k]) or (_TYPES[k] is int and isinstance(v, bool)):
            raise ConfigInvalid(f"config key {k!r} must be {_TYPES[k].__name__}")
    cfg = _merge(DEFAULT_CONFIG, doc)
    if cfg["providers"]["mode"] not in ("live", "record", "replay"):
        raise ConfigInvalid("providers.mode must be live, record or replay")
    if cfg["eval"]["folds"] not in (5, 10):
        raise ConfigInvalid("eval.folds must be 5 or 10")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command: str, cfg: dict, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.outputs: list[str] = []
        self.t0 = time.perf_counter()
        self.timings: dict[str, float] = {}
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def seed(self, name: str) -> int:
        return derive_seed(self.cfg["seed"], name)

    def lap(self, label: str) -> None:
        self.timings[label] = round(time.perf_counter() - self.t0, 3)

    def finish(self) -> None:
        (self.out / "config.resolved.json").write_text(json.dumps(self.cfg, indent=2, sort_keys=True) + "\n",
                                                       encoding="utf-8")
        self.timings["total"] = round(time.perf_counter() - self.t0, 3)
        manifest = {"command": self.command, "version": __version__, "config_hash": config_hash(self.cfg),
                    "seed": self.cfg["seed"], "outputs": self.outputs, "timings_s": self.timings}
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8")


def _need(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputMissing(f"{p} not found")
    return p


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_features(path):
    from .features.extract import read_features_csv

    return read_features_csv(_need(path))


# -- commands ------------------------------------------------------------------


def cmd_synth(args, run: Run) -> None:
    from .dataset import synthesize_corpus, synthesize_fixtures, write_csv
    from .features.providers import FixtureStore

    sc = run.cfg["synth"]
    n, count = int(sc["n_per_class"]), int(sc["datasets"])
    merged = None
    for i in range(count):
        name = "corpus" if count == 1 else f"corpus_{i}"
        d = synthesize_corpus(n, run.seed(f"synth:{i}"), name=name)
        write_csv(d, run.path(f"{name}.csv"))
        stores = synthesize_fixtures(d, run.seed(f"fixtures:{i}"), run.cfg["today"])
        if merged is None:
            merged = stores
        else:
            for kind, st in stores.items():
                for key, entry in st.entries.items():
                    merged[kind].entries.setdefault(key, entry)
    fx = run.out / "fixtures"
    fx.mkdir(exist_ok=True)
    for kind, st in merged.items():
        FixtureStore.save(st, run.path(f"fixtures/{kind}.json"))


def _providers(cfg, args):
    from .features.providers import block_network, build_providers

    mode = cfg["providers"]["mode"]
    fixtures = cfg["providers"].get("fixtures")
    if mode == "replay":
        block_network(True)
        if fixtures is None or not Path(fixtures).is_dir():
            raise InputMissing(f"replay mode needs an existing fixture directory, got {fixtures!r}")
    return build_providers(mode, fixtures)


def cmd_extract(args, run: Run) -> None:
    from .dataset import ingest_csv
    from .features.extract import FeatureExtractor, write_features_csv

    d = ingest_csv(_need(args.input))
    suite = _providers(run.cfg, args)
    fd, encoder = FeatureExtractor(suite, run.cfg["today"]).featurize(d)
    run.lap("extract")
    write_features_csv(fd, run.path("features.csv"))
    _write_json(run.path("encoder.json"), encoder.to_json())
    _write_json(run.path("extract_summary.json"), {"rows": len(fd), "skipped": d.skipped,
                                                   "providers": suite.mode})
    if suite.mode == "record":
        suite.save(run.out / "fixtures")


def cmd_train(args, run: Run) -> None:
    from .dataset import prepare_split
    from .ensembles import train

    d = _load_features(args.input)
    kind = args.kind or run.cfg["model"]["kind"]
    Xtr, ytr, _, _, scaler, encoder = prepare_split(d, d.subset([]))
    model = train(kind, Xtr, seed=run.seed("train"), y=ytr, **run.cfg["model"].get("params", {}))
    run.lap("train")
    model.save(run.path("model.json"))
    _write_json(run.path("scaler.json"), scaler.to_json())
    _write_json(run.path("encoder.json"), encoder.to_json())


def cmd_eval_matched(args, run: Run) -> None:
    from .evalx import eval_matched, write_reports_csv, write_reports_json

    d = _load_features(args.input)
    kinds = [args.kind] if args.kind else run.cfg["eval"]["kinds"]
    folds = args.folds or run.cfg["eval"]["folds"]
    reports = [eval_matched(d, k, folds, run.seed("eval"), **_params(run.cfg, k)) for k in kinds]
    run.lap("eval")
    write_reports_csv(reports, run.path("matched.csv"))
    write_reports_json(reports, run.path("matched.json"))


def _params(cfg, kind):
    return cfg["model"].get("params", {}) if cfg["model"].get("kind") == kind else {}


def cmd_eval_mismatched(args, run: Run) -> None:
    from .evalx import eval_mismatched, write_reports_csv, write_reports_json

    if len(args.input) < 2:
        raise ConfigInvalid("eval-mismatched needs at least two --input files")
    datasets = [_load_features(p) for p in args.input]
    if len({d.name for d in datasets}) < len(datasets):
        from dataclasses import replace

        datasets = [replace(d, name=f"{Path(p).parent.name}/{d.name}") for d, p in zip(datasets, args.input)]
    kinds = [args.kind] if args.kind else run.cfg["eval"]["kinds"]
    reports = []
    for k in kinds:
        reports.extend(eval_mismatched(datasets, k, run.seed("eval"), **_params(run.cfg, k)))
    run.lap("eval")
    write_reports_csv(reports, run.path("mismatched.csv"))
    write_reports_json(reports, run.path("mismatched.json"))


def cmd_cluster(args, run: Run) -> None:
    from .clusterer import elbow_scan, project_2d, write_curve_csv, write_projection_csv
    from .dataset import prepare_split

    d = _load_features(args.input)
    X, y, _, _, _, _ = prepare_split(d, d.subset([]))
    c = run.cfg["cluster"]
    curve, k, results = elbow_scan(X, range(int(c["k_min"]), int(c["k_max"]) + 1), run.seed("cluster"),
                                   int(c["restarts"]))
    chosen = next(r for r in results if r.k == k)
    xy = project_2d(X)
    run.lap("cluster")
    write_curve_csv(run.path("elbow.csv"), curve)
    write_projection_csv(run.path("projection.csv"), xy, chosen.assignments, y)
    _write_json(run.path("cluster.json"), {"chosen_k": k, "distortion": chosen.distortion,
                                           "iterations": chosen.iterations})


def cmd_attack(args, run: Run) -> None:
    from .dataset import prepare_split, split
    from .ensembles import EnsembleModel, train
    from .zoo import AttackConfig, evaluate_attack, write_outcomes_jsonl

    d = _load_features(args.input)
    ac = dict(run.cfg["attack"])
    max_samples = int(ac.pop("max_samples"))
    frac = float(ac.pop("train_fraction"))
    config = AttackConfig.from_dict(dict(ac, seed=run.seed("attack")))
    tr, te = split(d, frac, run.seed("attack:split"))
    Xtr, ytr, Xte, yte, _, _ = prepare_split(tr, te)
    kind = args.kind or run.cfg["model"]["kind"]
    if args.model:
        model = EnsembleModel.load(_need(args.model))
        kind = model.kind
    else:
        model = train(kind, Xtr, seed=run.seed("train"), y=ytr, **_params(run.cfg, kind))
    Xte, yte = Xte[:max_samples], yte[:max_samples]
    report = evaluate_attack(model, Xte, yte, config)
    run.lap("attack")
    with open(run.path("attack.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Dataset", "Confidence", "Model", "CleanAccuracy", "AttackAccuracyRate", "AttackSuccessRate",
                    "Attacked", "Tested"])
        w.writerow([d.name, repr(config.rho), kind, repr(report.clean_accuracy), repr(report.robust_accuracy),
                    "" if report.attack_success_rate is None else repr(report.attack_success_rate),
                    report.n_attacked, report.n_test])
    write_outcomes_jsonl(run.path("attack_samples.jsonl"), report)


def cmd_profile(args, run: Run) -> None:
    from .dataset import ingest_csv, profile, write_profile

    d = ingest_csv(_need(args.input))
    report = profile(d)
    write_profile(report, run.path("profile.json"), run.path("histogram.csv"))


COMMANDS = {
    "synth": cmd_synth, "extract": cmd_extract, "train": cmd_train, "eval-matched": cmd_eval_matched,
    "eval-mismatched": cmd_eval_mismatched, "cluster": cmd_cluster, "attack": cmd_attack, "profile": cmd_profile,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="advurl", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--providers", choices=("live", "record", "replay"))
        p.add_argument("--fixtures", help="fixture directory for replay/record")
        p.add_argument("--out", default="out")
        if name == "eval-mismatched":
            p.add_argument("--input", nargs="+", required=True)
        elif name != "synth":
            p.add_argument("--input", required=True)
        if name in ("train", "eval-matched", "eval-mismatched", "attack"):
            p.add_argument("--kind", choices=("random_forest", "adaboost", "gradient_boost", "regularized_boost"))
        if name == "eval-matched":
            p.add_argument("--folds", type=int, choices=(5, 10))
        if name == "synth":
            p.add_argument("--n-per-class", type=int)
            p.add_argument("--datasets", type=int)
        if name == "attack":
            p.add_argument("--model")
            p.add_argument("--rho", type=float)
            p.add_argument("--budget", type=int)
    return ap


def resolve(args) -> dict:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.providers:
        cfg["providers"]["mode"] = args.providers
    if args.fixtures:
        cfg["providers"]["fixtures"] = args.fixtures
    for flag, section, key in (("n_per_class", "synth", "n_per_class"), ("datasets", "synth", "datasets"),
                               ("rho", "attack", "rho"), ("budget", "attack", "budget_K")):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[section][key] = v
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .features.providers import block_network

    try:
        cfg = resolve(args)
        run = Run(args.command, cfg, Path(args.out))
        COMMANDS[args.command](args, run)
        run.finish()
    except (AdvUrlError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    finally:
        block_network(False)
    return 0


if __name__ == "__main__":
    sys.exit(main())
