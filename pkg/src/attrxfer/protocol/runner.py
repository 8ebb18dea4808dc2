"""End-to-end transfer runs: attribute on the source, extract features,
evaluate every model on images and on features, assemble the report."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..attribution import (AttributionCache, GradCam, RandomMask,
                           SoundnessSaliency)
from ..attribution.maps import AttributionMap
from ..data import Dataset
from ..features import FeatureExtractor
from ..preprocess import bilinear_resize
from .evaluate import evaluate
from .records import TransferReport, probability_histogram
from .rendering import (render_report_table, write_histogram_csv,
                        write_per_example_csv, write_report_csv,
                        write_report_json)

log = logging.getLogger(__name__)

METHODS = ("SS", "GC", "RANDOM")


def compute_attributions(source, dataset: Dataset, engine, cache=None,
                         batch_size=16, keep_going=False,
                         require_cached=False, progress=False) -> dict:
    """Attribution maps for every dataset example, reusing cached ones.

    Returns {image_id: AttributionMap}. Freshly computed maps are written
    back to the cache along with a manifest of the engine parameters.
    With ``require_cached`` nothing is computed: any uncached image is an
    error listing the missing ids. With ``keep_going`` a failing batch is
    logged and skipped instead of aborting the whole run.
    """
    from ..exceptions import CacheError, OptimizationError

    digest = engine.config_digest()
    found, missing = {}, []
    for ex in dataset.examples:
        if cache is not None and cache.contains(source.model_id,
                                                engine.method, digest, ex.id):
            found[ex.id] = cache.get(source.model_id, engine.method, digest,
                                     ex.id)
        else:
            missing.append(ex)
    if missing and require_cached:
        ids = [ex.id for ex in missing]
        head = ", ".join(ids[:10]) + (", ..." if len(ids) > 10 else "")
        raise CacheError(
            f"attribution cache is missing {len(ids)} map(s) for "
            f"{source.model_id}/{engine.method}/{digest}: {head}")
    if missing:
        log.info("attributing %d images (%d cached) with %s/%s",
                 len(missing), len(found), engine.method, digest)
        batches = [missing[i:i + batch_size]
                   for i in range(0, len(missing), batch_size)]
        if progress:
            from tqdm import tqdm
            batches = tqdm(batches, desc=f"{engine.method} maps", unit="batch")
        computed = []
        for chunk in batches:
            try:
                computed.extend(engine.attribute_batch(source, chunk, dataset))
            except OptimizationError as exc:
                if not keep_going:
                    raise
                log.warning("skipping %d image(s) after failure: %s",
                            len(chunk), exc)
        if cache is not None and computed:
            cache.write_manifest(source.model_id, engine.method, digest,
                                 engine.get_params())
            cache.put_many(computed)
        for amap in computed:
            found[amap.image_id] = amap
    elif found:
        log.info("all %d maps served from cache (%s/%s)", len(found),
                 engine.method, digest)
    return found


def derive_random_maps(reference_maps: dict, seed, cache=None,
                       source_model_id=None) -> dict:
    """Mass-matched random control maps, one per reference map."""
    ref_hashes = {m.config_hash for m in reference_maps.values()}
    if len(ref_hashes) != 1:
        raise ValueError(f"reference maps mix config hashes: {ref_hashes}")
    control = RandomMask(seed=seed, match_hash=next(iter(ref_hashes)))
    digest = control.config_digest()
    out = {}
    fresh = []
    for image_id in sorted(reference_maps):
        ref = reference_maps[image_id]
        if cache is not None and cache.contains(ref.source_model_id,
                                                control.method, digest,
                                                image_id):
            out[image_id] = cache.get(ref.source_model_id, control.method,
                                      digest, image_id)
        else:
            amap = control.attribute_like(ref)
            fresh.append(amap)
            out[image_id] = amap
    if cache is not None and fresh:
        any_ref = next(iter(reference_maps.values()))
        cache.write_manifest(any_ref.source_model_id, control.method, digest,
                             control.get_params())
        cache.put_many(fresh)
    return out


def _fit_maps_to_images(maps: dict, dataset: Dataset) -> dict:
    """Resize maps to each image's spatial size where they differ."""
    by_id = {ex.id: ex for ex in dataset.examples}
    fitted = {}
    for image_id, amap in maps.items():
        ex = by_id.get(image_id)
        if ex is None:
            continue
        target_hw = ex.image.shape[-2:]
        if amap.data.shape == target_hw:
            fitted[image_id] = amap
        else:
            data = bilinear_resize(amap.data, target_hw).clip(0.0, 1.0)
            fitted[image_id] = AttributionMap(
                data=data, image_id=amap.image_id,
                source_model_id=amap.source_model_id, method=amap.method,
                config_hash=amap.config_hash)
    return fitted


def check_shared_dataset_tag(models, dataset: Dataset) -> None:
    """All participating models must have been trained on this dataset's
    distribution; the training tag stamped on each adapter is the witness."""
    bad = [(m.model_id, m.dataset_tag) for m in models
           if m.dataset_tag != dataset.tag]
    if bad:
        detail = "; ".join(f"{mid}: {tag!r}" for mid, tag in bad)
        raise ValueError(f"models not trained on dataset {dataset.tag!r}: "
                         f"{detail}")


def run_transfer_protocol(source, targets, method, dataset: Dataset, *,
                          engine=None, reference_engine=None, cache=None,
                          binarize=False, threshold=0.5, f1_averaging="macro",
                          bins=10, random_seed=0, batch_size=16, jobs=1,
                          identity_mask=False, require_cached=False,
                          config_snapshot=None,
                          progress=False) -> TransferReport:
    """Run one (source, method) experiment over all targets.

    The source model is always evaluated too, in both modes. ``engine``
    overrides the default attribution engine for the method; for RANDOM,
    ``reference_engine`` (default SS) supplies the maps whose masses the
    controls match. ``identity_mask`` is a debug switch replacing every
    map with ones (feature records must then equal image records).
    Any failure propagates; no partial report is returned.
    """
    import numpy as np

    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    eval_models = [source] + [t for t in targets
                              if t.model_id != source.model_id]
    check_shared_dataset_tag(eval_models, dataset)

    if identity_mask:
        digest = "identity-mask"
        maps = {ex.id: AttributionMap(
                    data=np.ones(ex.image.shape[-2:], dtype=np.float32),
                    image_id=ex.id, source_model_id=source.model_id,
                    method=method, config_hash=digest)
                for ex in dataset.examples}
    elif method == "RANDOM":
        ref = reference_engine if reference_engine is not None \
            else SoundnessSaliency()
        ref_maps = compute_attributions(source, dataset, ref, cache=cache,
                                        batch_size=batch_size,
                                        require_cached=require_cached,
                                        progress=progress)
        maps = derive_random_maps(ref_maps, random_seed, cache=cache)
        digest = next(iter(maps.values())).config_hash
    else:
        if engine is None:
            engine = SoundnessSaliency() if method == "SS" else GradCam()
        if engine.method != method:
            raise ValueError(f"engine is for {engine.method}, not {method}")
        maps = compute_attributions(source, dataset, engine, cache=cache,
                                    batch_size=batch_size,
                                    require_cached=require_cached,
                                    progress=progress)
        digest = engine.config_digest()

    extractor = FeatureExtractor(binarize=binarize, threshold=threshold)
    features = extractor.transform(dataset, _fit_maps_to_images(maps, dataset))

    def eval_both(model):
        rec_i = evaluate(model, dataset, "I", f1_averaging=f1_averaging)
        rec_f = evaluate(model, dataset, "F", features=features,
                         f1_averaging=f1_averaging)
        return rec_i, rec_f

    if jobs > 1:
        # one adapter instance per stream; results keep model order
        clones = [m.clone() for m in eval_models]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(eval_both, clones))
    else:
        pairs = [eval_both(m) for m in eval_models]

    records = [rec for pair in pairs for rec in pair]
    histograms = {}
    for rec in records:
        for which in ("p_true", "p_pred"):
            histograms[(rec.target_model_id, rec.input_mode, which)] = \
                probability_histogram(rec, which=which, bins=bins)
    return TransferReport(source_model_id=source.model_id, method=method,
                          config_hash=digest, dataset_tag=dataset.tag,
                          records=tuple(records), histograms=histograms,
                          config_snapshot=config_snapshot or {})


def write_report_files(report: TransferReport, out_dir) -> list:
    """Write report.csv, report.json, table.txt plus per-example and
    histogram CSVs; returns every path written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [write_report_csv(report, out_dir / "report.csv"),
             write_report_json(report, out_dir / "report.json")]
    table = out_dir / "table.txt"
    table.write_text(render_report_table(report))
    paths.append(table)
    for rec in report.records:
        name = f"{rec.target_model_id}_{rec.input_mode}"
        paths.append(write_per_example_csv(
            rec, out_dir / "per_example" / f"{name}.csv"))
    for (target, mode, which), hist in sorted(report.histograms.items()):
        paths.append(write_histogram_csv(
            hist, out_dir / "histograms" / f"{target}_{mode}_{which}.csv"))
    return paths
