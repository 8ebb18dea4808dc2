"""Config-driven orchestration shared by the CLI commands.

Everything here is a pure function of the parsed config plus the files it
references: the dataset rebuilds deterministically from the seed, weights
and attribution maps live under the run's output directory, and every
random stream is a named child of the root seed.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from pathlib import Path

from .attribution import AttributionCache, GradCam, SoundnessSaliency
from .data import generate_shapes_dataset, load_image_folder, split_by_id_hash
from .models import TrainConfig, available_models, load_weights, resolve_model
from .preprocess import InputSpec
from .protocol.runner import run_transfer_protocol, write_report_files
from .runconfig import config_value
from .seeding import child_seed

log = logging.getLogger(__name__)

CACHE_ENV_VAR = "ATTRXFER_CACHE_ROOT"


def dataset_from_config(config: dict):
    """Build (train, test) splits for the configured corpus."""
    ds = config["dataset"]
    if ds["kind"] == "shapes":
        full = generate_shapes_dataset(
            n=ds["n"], num_classes=ds["num_classes"], side=ds["side"],
            seed=child_seed(config["seed"], "data"), channels=ds["channels"])
    elif ds["kind"] == "folder":
        if not ds["path"]:
            raise ValueError("dataset.kind is 'folder' but dataset.path "
                             "is unset")
        full = load_image_folder(ds["path"])
    else:
        raise ValueError(f"unknown dataset.kind {ds['kind']!r}")
    return split_by_id_hash(full, train_fraction=ds["train_fraction"])


def model_ids(config: dict) -> list:
    ids = [config["models"]["source"]]
    for target in config["models"]["targets"]:
        if target not in ids:
            ids.append(target)
    return ids


def output_dir(config: dict) -> Path:
    return Path(config["output"]["dir"])


def weights_dir(config: dict) -> Path:
    configured = config["models"]["weights_dir"]
    return Path(configured) if configured else output_dir(config) / "weights"


def weights_path(config: dict, model_id: str) -> Path:
    return weights_dir(config) / f"{model_id}.npz"


def cache_root(config: dict) -> Path:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    configured = config["output"]["cache"]
    return Path(configured) if configured else output_dir(config) / "cache"


def report_dir(config: dict) -> Path:
    return output_dir(config) / "report" / config["attribution"]["method"]


def plots_dir(config: dict) -> Path:
    return output_dir(config) / "plots" / config["attribution"]["method"]


def _input_spec(config: dict) -> InputSpec:
    ds = config["dataset"]
    side = ds["side"] if ds["kind"] == "shapes" else 32
    return InputSpec(channels=ds["channels"] if ds["kind"] == "shapes" else 3,
                     height=side, width=side)


def build_model(config: dict, model_id: str, num_classes: int):
    """Fresh (untrained) adapter for a configured model id."""
    return resolve_model(model_id, _input_spec(config), num_classes,
                         seed=config["seed"])


def train_models(config: dict, progress=False) -> dict:
    """Train every configured model; write weights and history files.

    Returns {model_id: {"weights": path, "history": path,
    "test_accuracy": float}}. Model ids are resolved before any training
    starts so an unknown id fails fast.
    """
    from .models import training

    ids = model_ids(config)
    known = available_models()
    unknown = [mid for mid in ids if mid not in known]
    if unknown:  # fail fast on typos before spending any training time
        raise ValueError(f"unknown model id(s) {', '.join(unknown)}; "
                         f"known ids: {', '.join(known)}")
    train, test = dataset_from_config(config)
    tr = config["train"]
    out = {}
    wdir = weights_dir(config)
    wdir.mkdir(parents=True, exist_ok=True)
    for model_id in ids:
        adapter = build_model(config, model_id, train.num_classes)
        cfg = TrainConfig(epochs=tr["epochs"], batch_size=tr["batch_size"],
                          step_size=tr["step_size"],
                          seed=child_seed(config["seed"], "train"),
                          optimizer=tr["optimizer"], momentum=tr["momentum"])
        log.info("training %s for %d epochs", model_id, cfg.epochs)
        _, history = training.train(adapter, train, cfg, progress=progress)
        wpath = weights_path(config, model_id)
        adapter.save(wpath)
        hpath = wdir / f"{model_id}_history.csv"
        _write_history(history, hpath)
        acc = training.test_accuracy(adapter, test)
        log.info("%s: test accuracy %.4f", model_id, acc)
        out[model_id] = {"weights": wpath, "history": hpath,
                         "test_accuracy": acc}
    return out


def _write_history(history, path: Path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("epoch", "loss", "train_accuracy"))
    for row in history:
        writer.writerow((row["epoch"], f"{row['loss']:.6f}",
                         f"{row['train_accuracy']:.6f}"))
    path.write_text(buf.getvalue())


def load_models(config: dict, ids=None) -> dict:
    ids = list(ids) if ids is not None else model_ids(config)
    loaded = {}
    for model_id in ids:
        path = weights_path(config, model_id)
        if not path.exists():
            raise FileNotFoundError(
                f"no weights for {model_id} at {path}; run `attrxfer train` "
                "first")
        loaded[model_id] = load_weights(path)
    return loaded


def attribution_engine(config: dict):
    """The configured SS or GC engine; RANDOM runs use the SS engine as
    the mass reference."""
    att = config["attribution"]
    method = att["method"]
    if method in ("SS", "RANDOM"):
        ss = att["ss"]
        grid = ss["mask_grid"]
        return SoundnessSaliency(
            steps=ss["steps"], step_size=ss["step_size"],
            baselines_per_step=ss["baselines_per_step"],
            sparsity_weight=ss["sparsity_weight"],
            tv_weight=ss["tv_weight"], objective_mode=ss["objective_mode"],
            mask_init=ss["mask_init"],
            mask_grid=tuple(grid) if grid else None,
            seed=child_seed(config["seed"], "attribution"))
    if method == "GC":
        gc = att["gc"]
        return GradCam(layer=gc["layer"], target=gc["target"])
    raise ValueError(f"unknown attribution method {method!r}")


def run_attribute(config: dict, keep_going=False, progress=False) -> dict:
    """Populate the attribution cache for every test image."""
    from .protocol.runner import compute_attributions

    _, test = dataset_from_config(config)
    source_id = config["models"]["source"]
    source = load_models(config, [source_id])[source_id]
    engine = attribution_engine(config)
    if isinstance(engine, GradCam) and engine.layer is not None and \
            engine.layer not in source.layer_names():
        raise ValueError(
            f"layer {engine.layer!r} not published by {source_id}; "
            f"available: {', '.join(source.layer_names())}")
    cache = AttributionCache(cache_root(config))
    maps = compute_attributions(
        source, test, engine, cache=cache,
        batch_size=config["attribution"]["batch_size"],
        keep_going=keep_going, progress=progress)
    return {"n_images": len(test), "n_maps": len(maps),
            "cache": str(cache_root(config)),
            "config_hash": engine.config_digest()}


def run_evaluate(config: dict, jobs=1, require_cached=True, progress=False):
    """Assemble the transfer report from the cache and write report files."""
    _, test = dataset_from_config(config)
    models = load_models(config)
    source = models[config["models"]["source"]]
    targets = [models[mid] for mid in config["models"]["targets"]]
    att, ev = config["attribution"], config["evaluation"]
    method = att["method"]
    engine = attribution_engine(config)
    report = run_transfer_protocol(
        source, targets, method, test,
        engine=None if method == "RANDOM" else engine,
        reference_engine=engine if method == "RANDOM" else None,
        cache=AttributionCache(cache_root(config)),
        binarize=ev["binarize"], threshold=ev["threshold"],
        f1_averaging=ev["f1_averaging"], bins=ev["bins"],
        random_seed=child_seed(config["seed"], "random"),
        batch_size=att["batch_size"], jobs=jobs,
        identity_mask=ev["identity_mask"], require_cached=require_cached,
        config_snapshot=config, progress=progress)
    paths = write_report_files(report, report_dir(config))
    return report, paths


def run_plot(config: dict, triptychs=0) -> list:
    """Histogram panels + grid from report.json; optional triptychs."""
    import json

    from .protocol.records import TransferReport
    from . import plotting

    rdir = report_dir(config)
    report_path = rdir / "report.json"
    if not report_path.exists():
        raise FileNotFoundError(f"missing report file {report_path}; run "
                                "`attrxfer evaluate` first")
    report = TransferReport.from_dict(json.loads(report_path.read_text()))
    if not report.records:
        raise ValueError(f"{report_path} contains no records")
    pdir = plots_dir(config)
    written = []
    grid_items = {}
    for rec in report.records:
        hist = report.histograms[(rec.target_model_id, rec.input_mode,
                                  "p_pred")]
        title = f"{rec.target_model_id} ({rec.input_mode})"
        written.append(plotting.plot_histogram(
            hist, title,
            pdir / f"histogram_{rec.target_model_id}_{rec.input_mode}.png"))
        grid_items[title] = hist
    written.append(plotting.plot_histogram_grid(grid_items,
                                                pdir / "grid.png"))
    if triptychs:
        written.extend(_plot_triptychs(config, report, triptychs, pdir))
    return written


def _plot_triptychs(config, report, count, pdir):
    from .features import extract_features
    from . import plotting

    _, test = dataset_from_config(config)
    cache = AttributionCache(cache_root(config))
    ev = config["evaluation"]
    written = []
    for ex in test.examples[:count]:
        amap = cache.get(report.source_model_id, report.method,
                         report.config_hash, ex.id)
        feature = extract_features(ex.image, amap, binarize=ev["binarize"],
                                   threshold=ev["threshold"])
        written.append(plotting.plot_triptych(
            ex.image, amap, feature,
            pdir / f"triptych_{_safe(ex.id)}.png", title=ex.id))
    return written


def _safe(image_id: str) -> str:
    import urllib.parse
    return urllib.parse.quote(image_id, safe="")
