"""Command-line front end: prepare, train, eval, predict, xcheck, report."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import BACKENDS, TrainedModel, batch_scores, build_circuit, evaluate, predict, run_mps
from .dataio import (SCHEMAS, bundled_iris_path, load_csv, load_task, make_pairwise_tasks,
                     parse_pairs, read_feature_rows, split_document, synth_agri, task_manifest,
                     write_csv)
from .encoding import DEFAULT_ANGLE_SCALE, encode_feature, fit_bounds, normalize_rows
from .errors import DomainError, MpsqcError, ValidationError
from .metrics import build_report
from .mps import expectation_z_mps, product_mps
from .simcore import product_state
from .training import GRADIENT_MODES, OPTIMIZERS, TrainConfig, train

logger = logging.getLogger("mpsqc")

XCHECK_TOL = 1e-8
DEFAULT_PAIRS = "1:2,2:3,1:3"


@dataclass
class RunConfig:
    """Every option any command reads; config file < command-line flags."""

    out_dir: str = "runs"
    seed: int = 0
    # data preparation
    schema: str = "iris"
    data: str | None = None
    label_column: str | None = None
    delimiter: str = ","
    features: list | None = None
    pairs: str = DEFAULT_PAIRS
    ratio: float = 0.8
    synth: int | None = None
    noise_sigma: float = 1.0
    # model and training
    task: str | None = None
    model: str | None = None
    split: str = "test"
    backend: str = "dense"
    use_ancilla: bool = True
    angle_scale: float = DEFAULT_ANGLE_SCALE
    optimizer: str = "cg"
    max_iters: int = 200
    grad_tol: float = 1e-5
    learning_rate: float = 0.1
    batch_size: int = 16
    gradient_mode: str = "parameter-shift"
    fd_step: float = 1e-4
    restarts: int = 3
    # prediction
    row: str | None = None
    input: str | None = None
    # backend cross-check
    n_wires: int = 5
    trials: int = 200
    # report
    runs: str | None = None

    def validate(self, command: str) -> None:
        if self.schema not in SCHEMAS:
            raise ValidationError(f"schema must be one of {SCHEMAS}")
        if self.backend not in BACKENDS:
            raise ValidationError(f"backend must be one of {BACKENDS}")
        if self.split not in ("train", "test"):
            raise ValidationError("split must be train or test")
        if not 0 < self.ratio < 1:
            raise ValidationError("ratio must be in (0, 1)")
        if self.synth is not None and self.synth < 1:
            raise ValidationError("synth must be >= 1")
        if not self.angle_scale > 0:
            raise ValidationError("angle_scale must be > 0")
        self.train_config()
        parse_pairs(self.pairs)
        if command == "prepare":
            if self.synth is not None and self.schema != "agri":
                raise ValidationError("--synth is only available for the agri schema")
            if self.data is None and self.synth is None and self.schema != "iris":
                raise ValidationError("--data is required for this schema")
            if self.schema == "generic" and not self.label_column:
                raise ValidationError("--label-column is required for the generic schema")
        if command in ("train", "eval") and not self.task:
            raise ValidationError("--task is required")
        if command in ("eval", "predict") and not self.model:
            raise ValidationError("--model is required")
        if command == "predict" and (self.row is None) == (self.input is None):
            raise ValidationError("give exactly one of --row or --input")
        if command == "xcheck":
            if self.trials < 1:
                raise ValidationError("trials must be >= 1")
            if not 2 <= self.n_wires <= 24:
                raise ValidationError("n_wires must be in [2, 24]")
        if command == "report" and not self.runs:
            raise ValidationError("--runs is required")

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            optimizer=self.optimizer, max_iters=self.max_iters, grad_tol=self.grad_tol,
            learning_rate=self.learning_rate, batch_size=self.batch_size,
            gradient_mode=self.gradient_mode, fd_step=self.fd_step, seed=self.seed,
            restarts=self.restarts,
        )


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a flat JSON object")
        values.update(loaded)
    names = {f.name for f in fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc
    cfg.validate(args.command)
    return cfg


class Outputs:
    """Stage output files and move them into place only when all succeed."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.pending = {}

    def text(self, name: str, content: str) -> Path:
        self.pending[name] = ("text", content)
        return self.out_dir / name

    def copy(self, name: str, src) -> Path:
        self.pending[name] = ("copy", str(src))
        return self.out_dir / name

    def commit(self) -> list:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        staged = []
        try:
            for name, (kind, payload) in self.pending.items():
                fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
                os.close(fd)
                if kind == "text":
                    Path(tmp).write_text(payload)
                else:
                    shutil.copyfile(payload, tmp)
                staged.append((tmp, self.out_dir / name))
        except BaseException:
            for tmp, _ in staged:
                Path(tmp).unlink(missing_ok=True)
            raise
        for tmp, dest in staged:
            os.replace(tmp, dest)
        return [dest for _, dest in staged]


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _echo_config(out: Outputs, command: str, cfg: RunConfig) -> None:
    out.text(f"{command}.config.json", _json({"command": command, "version": __version__, **asdict(cfg)}))


# -- commands -----------------------------------------------------------------


def cmd_prepare(cfg: RunConfig) -> int:
    out = Outputs(cfg.out_dir)
    if cfg.synth is not None:
        data = synth_agri(cfg.synth, cfg.seed, cfg.noise_sigma)
        tmp_dir = Path(tempfile.mkdtemp())
        src = tmp_dir / "agri_synth.csv"
        write_csv(data, src)
        schema, label_column = "agri", None
    else:
        src = Path(cfg.data) if cfg.data else bundled_iris_path()
        schema, label_column = cfg.schema, cfg.label_column
        data = load_csv(src, label_column, schema, cfg.delimiter, cfg.features)
        tmp_dir = None
    try:
        data_name = f"{schema}_data.csv" if cfg.synth is None else "agri_synth.csv"
        out.copy(data_name, src)
        tasks = make_pairwise_tasks(data, parse_pairs(cfg.pairs), cfg.ratio, cfg.seed)
        for task in tasks:
            split_name = f"{task.name}.split.json"
            man = task_manifest(task, src, schema, label_column, cfg.delimiter, split_name)
            man["data"]["path"] = data_name
            out.text(f"{task.name}.manifest.json", _json(man))
            out.text(split_name, _json(split_document(task)))
        _echo_config(out, "prepare", cfg)
        out.commit()
    finally:
        if tmp_dir is not None:
            shutil.rmtree(tmp_dir, ignore_errors=True)
    if data.dropped:
        print(f"dropped {data.dropped} incomplete row(s)")
    print(f"{len(data.labels)} rows, {len(data.feature_names)} features, classes {list(data.class_ids)}")
    for task in tasks:
        print(f"{task.name}: classes {task.class_zero}->0 {task.class_one}->1, "
              f"{len(task.train)} train / {len(task.test)} test")
    return 0


def _train_model(cfg: RunConfig):
    task = load_task(cfg.task)
    x_train, y_train = task.split("train")
    bounds = fit_bounds(x_train)
    circuit = build_circuit(len(task.feature_names), cfg.use_ancilla, cfg.angle_scale)
    model = train(circuit, (normalize_rows(x_train, bounds), y_train), cfg.train_config(),
                  bounds=bounds, class_mapping=task.class_mapping, backend=cfg.backend)
    model.metadata.update({"task": task.name, "feature_names": list(task.feature_names)})
    return task, model


def cmd_train(cfg: RunConfig) -> int:
    task, model = _train_model(cfg)
    x_train, y_train = task.split("train")
    m = batch_scores(model.circuit, model.theta, normalize_rows(x_train, model.bounds), cfg.backend)
    report = build_report(y_train, m)
    out = Outputs(cfg.out_dir)
    out.text(f"{task.name}.model.json", model.dumps())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "cost"])
    for i, j in enumerate(model.history):
        w.writerow([i, repr(float(j))])
    out.text(f"{task.name}.history.csv", buf.getvalue())
    _echo_config(out, "train", cfg)
    out.commit()
    print(f"{task.name}: train cost {report.cost:.4f}, train accuracy {report.acc:.2f}%")
    return 0


def _load_model(path) -> TrainedModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read model {path}: {exc.strerror}") from exc
    return TrainedModel.loads(text)


def _check_compatible(model: TrainedModel, task) -> None:
    if model.circuit.n_data != len(task.feature_names):
        raise ValidationError(
            f"model expects {model.circuit.n_data} features, task has {len(task.feature_names)}")
    names = model.metadata.get("feature_names")
    if names is not None and list(names) != list(task.feature_names):
        raise ValidationError("model and task feature names differ")
    want = {str(k): v for k, v in task.class_mapping.items()}
    if model.class_mapping and model.class_mapping != want:
        raise ValidationError("model and task class mappings differ")


def cmd_eval(cfg: RunConfig) -> int:
    model = _load_model(cfg.model)
    task = load_task(cfg.task)
    _check_compatible(model, task)
    x, y = task.split(cfg.split)
    m = batch_scores(model.circuit, model.theta, normalize_rows(x, model.bounds), cfg.backend)
    report = build_report(y, m)
    doc = {"task": task.name, "split": cfg.split, "backend": cfg.backend, **report.to_dict()}
    out = Outputs(cfg.out_dir)
    out.text(f"{task.name}.{cfg.split}.report.json", _json(doc))
    out.text(f"{task.name}.{cfg.split}.samples.csv", report.samples_csv())
    _echo_config(out, "eval", cfg)
    out.commit()
    t = report.taylor
    fmt = lambda v: "undefined" if v is None else f"{v:.4f}"  # noqa: E731
    d = report.to_dict()
    print(f"{task.name} [{cfg.split}] n={report.counts.total} cost={report.cost:.4f} "
          f"ACC={report.acc:.2f} Spec={fmt(d['spec'])} Sens={fmt(d['sens'])} Gini={fmt(d['gini'])}")
    print(f"  taylor: sd_actual={t.std_actual:.4f} sd_pred={t.std_pred:.4f} "
          f"r={fmt(d['taylor']['r'])} cRMSD={t.crmsd:.4f}")
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    model = _load_model(cfg.model)
    mapping = model.class_mapping
    if cfg.row is not None:
        try:
            row = [float(v) for v in cfg.row.split(",")]
        except ValueError:
            raise ValidationError(f"--row must be comma separated numbers, got {cfg.row!r}") from None
        label, m = predict(model, row, cfg.backend)
        name = mapping.get(str(label), {}).get("name", label)
        print(f"label={label} class={name} score={m!r}")
        return 0
    rows = read_feature_rows(cfg.input, model.metadata.get("feature_names"),
                             model.circuit.n_data, cfg.delimiter)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "score", "predicted", "class"])
    for i, row in enumerate(rows):
        label, m = predict(model, row, cfg.backend)
        w.writerow([i, repr(m), label, mapping.get(str(label), {}).get("name", label)])
    out = Outputs(cfg.out_dir)
    out.text("predictions.csv", buf.getvalue())
    _echo_config(out, "predict", cfg)
    out.commit()
    print(f"wrote {len(rows)} predictions to {Path(cfg.out_dir) / 'predictions.csv'}")
    return 0


def cmd_xcheck(cfg: RunConfig) -> int:
    result = xcheck(cfg.n_wires, cfg.trials, cfg.seed)
    out = Outputs(cfg.out_dir)
    out.text(f"xcheck_{cfg.n_wires}w.json", _json(result))
    _echo_config(out, "xcheck", cfg)
    out.commit()
    status = "PASS" if result["passed"] else "FAIL"
    print(f"xcheck {status}: {cfg.trials} trials on {cfg.n_wires} wires, "
          f"max |dm| = {result['max_abs_diff']:.3e}, bond profile {tuple(result['bond_profile'])}")
    if not result["passed"]:
        for f in result["failures"]:
            print(f"  seed {cfg.seed} trial {f['trial']}: |dm| = {f['abs_diff']:.3e}")
        return 1
    return 0


def xcheck(n_wires: int, trials: int, seed: int, tol: float = XCHECK_TOL) -> dict:
    """Random staircase evaluations on both backends; returns a summary document."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if n_wires < 2:
        raise DomainError("n_wires must be >= 2")
    circuit = build_circuit(n_wires - 1, use_ancilla=True, angle_scale=1.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    profile = np.zeros(n_wires - 1, dtype=int)
    failures = []
    for t in range(trials):
        theta = rng.uniform(-np.pi, np.pi, circuit.n_params)
        angles = rng.uniform(-np.pi, np.pi, circuit.n_data)
        factors = [encode_feature(a) for a in angles]
        m_dense = evaluate(circuit, theta, product_state(factors), backend="dense")
        final = run_mps(circuit, theta, product_mps(factors))
        m_mps = 0.5 * (1.0 - expectation_z_mps(final, circuit.output_wire))
        profile = np.maximum(profile, final.bond_dims())
        diff = abs(m_dense - m_mps)
        worst = max(worst, diff)
        if diff > tol:
            failures.append({"trial": t, "abs_diff": diff})
    bound = [min(2**k, 2 ** (n_wires - k)) for k in range(1, n_wires)]
    return {
        "n_wires": n_wires,
        "trials": trials,
        "seed": seed,
        "tolerance": tol,
        "max_abs_diff": worst,
        "bond_profile": [int(b) for b in profile],
        "bond_bound": bound,
        "failures": failures,
        "passed": not failures and all(p <= b for p, b in zip(profile, bound)),
    }


REPORT_COLUMNS = ["task", "split", "n", "cost", "acc", "spec", "sens", "gini",
                  "std_actual", "std_pred", "r", "crmsd"]


def cmd_report(cfg: RunConfig) -> int:
    runs = Path(cfg.runs)
    files = sorted(runs.glob("*.report.json"))
    if not files:
        raise ValidationError(f"no *.report.json files under {runs}")
    rows = []
    for f in files:
        d = json.loads(f.read_text())
        t = d["taylor"]
        rows.append([d["task"], d["split"], d["n"], d["cost"], d["acc"], d["spec"], d["sens"],
                     d["gini"], t["std_actual"], t["std_pred"], t["r"], t["crmsd"]])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    w.writerows(["" if v is None else v for v in r] for r in rows)
    out = Outputs(cfg.out_dir)
    out.text("summary.csv", buf.getvalue())
    _echo_config(out, "report", cfg)
    out.commit()
    cell = lambda v: "-" if v is None else (f"{v:.3f}" if isinstance(v, float) else str(v))  # noqa: E731
    print("  ".join(f"{c:>8}" for c in REPORT_COLUMNS))
    for r in rows:
        print("  ".join(f"{cell(v):>8}" for v in r))
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "xcheck": cmd_xcheck,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of option values")
    common.add_argument("--seed", type=int)
    common.add_argument("--backend", choices=BACKENDS)
    common.add_argument("--optimizer", choices=OPTIMIZERS)
    common.add_argument("--restarts", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mpsqc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", parents=[common], help="build binary task manifests")
    p.add_argument("--schema", choices=SCHEMAS)
    p.add_argument("--data", help="input CSV (defaults to the bundled Iris file)")
    p.add_argument("--label-column", dest="label_column")
    p.add_argument("--delimiter")
    p.add_argument("--features", type=lambda s: [x.strip() for x in s.split(",")])
    p.add_argument("--pairs", help=f"class pairs, default {DEFAULT_PAIRS}")
    p.add_argument("--ratio", type=float)
    p.add_argument("--synth", type=int, help="generate N synthetic rows per ETo class")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)

    p = sub.add_parser("train", parents=[common], help="fit a classifier on a task")
    p.add_argument("--task", help="task manifest")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--grad-tol", dest="grad_tol", type=float)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--gradient-mode", dest="gradient_mode", choices=GRADIENT_MODES)
    p.add_argument("--fd-step", dest="fd_step", type=float)
    p.add_argument("--angle-scale", dest="angle_scale", type=float)
    p.add_argument("--no-ancilla", dest="use_ancilla", action="store_const", const=False)

    p = sub.add_parser("eval", parents=[common], help="metrics of a model on a task split")
    p.add_argument("--model")
    p.add_argument("--task")
    p.add_argument("--split", choices=("train", "test"))

    p = sub.add_parser("predict", parents=[common], help="score raw feature rows")
    p.add_argument("--model")
    p.add_argument("--row", help="comma separated raw feature values")
    p.add_argument("--input", help="CSV with the model's feature columns")
    p.add_argument("--delimiter")

    p = sub.add_parser("xcheck", parents=[common], help="dense vs MPS backend agreement")
    p.add_argument("--n-wires", dest="n_wires", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("report", parents=[common], help="collect eval reports into one table")
    p.add_argument("--runs", help="directory holding *.report.json files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except MpsqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
