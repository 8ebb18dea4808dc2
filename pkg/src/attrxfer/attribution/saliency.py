"""Mask optimization against a frozen classifier.

A mask M = sigmoid(theta) blends the target image with baseline images
drawn fresh each step; gradient descent on theta pushes the classifier's
output on the blend toward confusion (``entropy`` mode) or toward
confidence in the source label (``label-ce`` mode), while a sparsity
penalty keeps the mask small. Optimization is batched over images because
each step's forward/backward dominates the cost.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from sklearn.base import BaseEstimator

from ..data import Dataset, LabeledExample
from ..exceptions import OptimizationError
from ..seeding import child_seed
from ..validation import (check_image, check_open_unit_interval,
                          check_positive_int, check_probability_vector)
from .maps import AttributionMap, config_digest
from .samplers import BaselinePool, BaselineSampler

OBJECTIVE_MODES = ("entropy", "label-ce")


def entropy(p) -> float:
    """Shannon entropy (nats) of a probability vector."""
    p = check_probability_vector(np.asarray(p, dtype=np.float64), name="p")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def composite_sample(image, mask, baselines) -> np.ndarray:
    """Blend one image with a batch of baselines through a mask.

    Returns ``mask * image + (1 - mask) * baselines`` with the mask
    broadcast across channels; shape (k, C, H, W).
    """
    x = check_image(np.asarray(image, dtype=np.float32), name="image")
    m = mask.data if isinstance(mask, AttributionMap) else np.asarray(mask)
    m = m.astype(np.float32)
    b = np.asarray(baselines, dtype=np.float32)
    if b.ndim == 3:
        b = b[None]
    if b.ndim != 4 or b.shape[1:] != x.shape:
        raise ValueError(f"baselines of shape {b.shape} do not match image "
                         f"shape {x.shape}")
    if m.shape != x.shape[-2:]:
        raise ValueError(f"mask shape {m.shape} does not match image spatial "
                         f"size {x.shape[-2:]}")
    return m[None, None] * x[None] + (1.0 - m[None, None]) * b


def _expand_mask(theta: torch.Tensor, out_hw) -> torch.Tensor:
    """sigmoid(theta), nearest-upsampled from the coarse grid if needed."""
    m = torch.sigmoid(theta)
    if tuple(m.shape[-2:]) != tuple(out_hw):
        m = F.interpolate(m.unsqueeze(1), size=tuple(out_hw), mode="nearest")
        m = m.squeeze(1)
    return m


def _total_variation(m: torch.Tensor) -> torch.Tensor:
    """Mean absolute forward difference, both axes; (B,) per mask."""
    dv = (m[:, 1:, :] - m[:, :-1, :]).abs()
    dh = (m[:, :, 1:] - m[:, :, :-1]).abs()
    tv = torch.zeros(m.shape[0], dtype=m.dtype, device=m.device)
    if dv.numel():
        tv = tv + dv.mean(dim=(1, 2))
    if dh.numel():
        tv = tv + dh.mean(dim=(1, 2))
    return tv


def _objective_core(model, x, theta, baselines, labels, mode,
                    sparsity_weight, tv_weight) -> torch.Tensor:
    """Per-image objective, differentiable in theta.

    x: (B, C, H, W) raw images; baselines: (B, k, C, H, W); theta: (B, gh, gw).
    """
    bsz, k = baselines.shape[:2]
    m = _expand_mask(theta, x.shape[-2:])
    mm = m[:, None, None]
    comp = mm * x[:, None] + (1.0 - mm) * baselines
    logits = model.forward_tensor(comp.reshape(bsz * k, *comp.shape[2:]))
    if mode == "entropy":
        logp = F.log_softmax(logits, dim=1)
        per = -(logp.exp() * logp).sum(dim=1)
    else:
        per = F.cross_entropy(logits, labels.repeat_interleave(k),
                              reduction="none")
    data_term = per.reshape(bsz, k).mean(dim=1)
    obj = data_term + sparsity_weight * m.mean(dim=(1, 2))
    if tv_weight:
        obj = obj + tv_weight * _total_variation(m)
    return obj


def ss_objective(model, image, mask_logits, baselines, *,
                 objective_mode="entropy", sparsity_weight=0.0,
                 tv_weight=0.0, label=None, return_grad=False):
    """Objective value for one image, optionally with d(obj)/d(mask_logits).

    ``baselines`` is an explicit (k, C, H, W) array so callers control the
    stochasticity; the gradient is exact for that fixed draw.
    """
    if objective_mode not in OBJECTIVE_MODES:
        raise ValueError(f"objective_mode must be one of {OBJECTIVE_MODES}, "
                         f"got {objective_mode!r}")
    if objective_mode == "label-ce" and label is None:
        raise ValueError("label-ce mode requires a label")
    x = check_image(np.asarray(image, dtype=np.float64), name="image")
    b = np.asarray(baselines, dtype=np.float64)
    if b.ndim == 3:
        b = b[None]
    dtype = next(model.module.parameters()).dtype
    x_t = torch.from_numpy(x).to(dtype).unsqueeze(0)
    b_t = torch.from_numpy(b).to(dtype).unsqueeze(0)
    theta = torch.from_numpy(np.asarray(mask_logits, dtype=np.float64))
    theta = theta.to(dtype).unsqueeze(0).requires_grad_(return_grad)
    labels = torch.tensor([0 if label is None else int(label)])
    obj = _objective_core(model, x_t, theta, b_t, labels, objective_mode,
                          float(sparsity_weight), float(tv_weight))[0]
    if not return_grad:
        return float(obj.detach())
    grad, = torch.autograd.grad(obj, theta)
    return float(obj.detach()), grad[0].detach().cpu().numpy()


class SoundnessSaliency(BaseEstimator):
    """Gradient-descent mask optimizer.

    Parameters mirror the update rule: ``steps`` iterations of plain descent
    with ``step_size`` on the mask logits, ``baselines_per_step`` fresh
    baseline draws per image per step, and the objective weights. With
    ``steps=1`` and ``step_size=0`` the returned mask is ``mask_init``
    everywhere. ``mask_grid=(gh, gw)`` optimizes a coarse grid that is
    nearest-upsampled to image size, so cell boundaries stay hard.

    After ``attribute``/``attribute_batch`` the diagnostic ``traces_``
    attribute holds one dict per image with the initial and final
    objective values (both averaged over a fresh baseline draw).
    """

    method = "SS"

    def __init__(self, steps=200, step_size=10.0, baselines_per_step=8,
                 sparsity_weight=1.0, tv_weight=0.0, objective_mode="entropy",
                 mask_init=0.5, mask_grid=None, seed=0):
        self.steps = steps
        self.step_size = step_size
        self.baselines_per_step = baselines_per_step
        self.sparsity_weight = sparsity_weight
        self.tv_weight = tv_weight
        self.objective_mode = objective_mode
        self.mask_init = mask_init
        self.mask_grid = mask_grid
        self.seed = seed

    def _check_params(self):
        check_positive_int(self.steps, name="steps")
        check_positive_int(self.baselines_per_step, name="baselines_per_step")
        check_open_unit_interval(self.mask_init, name="mask_init")
        if self.objective_mode not in OBJECTIVE_MODES:
            raise ValueError(f"objective_mode must be one of "
                             f"{OBJECTIVE_MODES}, got {self.objective_mode!r}")
        if self.step_size < 0:
            raise ValueError("step_size must be >= 0")
        if self.sparsity_weight < 0 or self.tv_weight < 0:
            raise ValueError("penalty weights must be >= 0")
        if self.mask_grid is not None:
            gh, gw = self.mask_grid
            check_positive_int(gh, name="mask_grid[0]")
            check_positive_int(gw, name="mask_grid[1]")

    def config_digest(self) -> str:
        return config_digest(self.method, self.get_params())

    def attribute(self, model, example: LabeledExample,
                  baselines) -> AttributionMap:
        return self.attribute_batch(model, [example], baselines)[0]

    def attribute_batch(self, model, examples, baselines) -> list:
        """Optimize masks for a batch of examples jointly.

        ``baselines`` is a BaselinePool (one per-image sampler is derived
        per example, seeded from this estimator's seed and the image id),
        a Dataset (a pool is built), or a single BaselineSampler when there
        is exactly one example.
        """
        self._check_params()
        examples = list(examples)
        if not examples:
            return []
        samplers = self._samplers_for(model, examples, baselines)
        spec = model.input_spec
        images = np.stack([
            np.asarray(_prep(ex.image, spec), dtype=np.float32)
            for ex in examples])
        labels = np.asarray([ex.label for ex in examples], dtype=np.int64)
        ids = [ex.id for ex in examples]
        masks, initial, final = self._optimize(model, images, labels,
                                               samplers, ids)
        self.traces_ = [
            {"image_id": ex.id, "initial_objective": float(initial[i]),
             "final_objective": float(final[i])}
            for i, ex in enumerate(examples)]
        digest = self.config_digest()
        return [AttributionMap(data=masks[i], image_id=ex.id,
                               source_model_id=model.model_id,
                               method=self.method, config_hash=digest)
                for i, ex in enumerate(examples)]

    def _samplers_for(self, model, examples, baselines):
        if isinstance(baselines, BaselineSampler):
            if len(examples) != 1:
                raise ValueError("a single BaselineSampler only serves one "
                                 "example; pass a BaselinePool for batches")
            return [baselines]
        if isinstance(baselines, Dataset):
            baselines = BaselinePool(baselines, model.input_spec)
        if not isinstance(baselines, BaselinePool):
            raise TypeError("baselines must be a BaselineSampler, "
                            "BaselinePool, or Dataset, got "
                            f"{type(baselines).__name__}")
        return [BaselineSampler(baselines,
                                child_seed(self.seed, "baselines", ex.id),
                                exclude_id=ex.id)
                for ex in examples]

    def _optimize(self, model, images, labels, samplers, ids):
        dtype = next(model.module.parameters()).dtype
        x = torch.from_numpy(images).to(dtype)
        labels_t = torch.from_numpy(labels)
        bsz, _, h, w = images.shape
        gh, gw = self.mask_grid if self.mask_grid is not None else (h, w)
        theta0 = math.log(self.mask_init / (1.0 - self.mask_init))
        theta = torch.full((bsz, gh, gw), theta0, dtype=dtype,
                           requires_grad=True)
        k = self.baselines_per_step
        initial = self._trace_objective(model, x, theta, labels_t, samplers)
        for step in range(self.steps):
            draws = np.stack([s.draw(k) for s in samplers])
            b_t = torch.from_numpy(draws).to(dtype)
            obj = _objective_core(model, x, theta, b_t, labels_t,
                                  self.objective_mode, self.sparsity_weight,
                                  self.tv_weight)
            bad = ~torch.isfinite(obj)
            if bad.any():
                raise OptimizationError(
                    f"objective became non-finite at step {step} for "
                    f"image(s) {_name_bad(ids, bad)}")
            if self.step_size:
                grad, = torch.autograd.grad(obj.sum(), theta)
                with torch.no_grad():
                    theta -= self.step_size * grad
            bad = ~torch.isfinite(theta).all(dim=2).all(dim=1)
            if bad.any():
                raise OptimizationError(
                    f"mask logits became non-finite at step {step} for "
                    f"image(s) {_name_bad(ids, bad)}")
        final = self._trace_objective(model, x, theta, labels_t, samplers)
        with torch.no_grad():
            masks = _expand_mask(theta.detach(), (h, w))
        masks = masks.cpu().numpy().astype(np.float32)
        np.clip(masks, 0.0, 1.0, out=masks)
        return masks, initial, final

    def _trace_objective(self, model, x, theta, labels_t, samplers):
        """Objective snapshot on a fresh draw, averaged over enough baselines
        that the sampling noise stays well below real objective changes."""
        k = max(self.baselines_per_step, 32)
        with torch.no_grad():
            draws = np.stack([s.draw(k) for s in samplers])
            b_t = torch.from_numpy(draws).to(x.dtype)
            obj = _objective_core(model, x, theta, b_t, labels_t,
                                  self.objective_mode, self.sparsity_weight,
                                  self.tv_weight)
        return obj.cpu().numpy()


def _name_bad(ids, bad_mask) -> str:
    names = [ids[i] for i in bad_mask.nonzero().flatten().tolist()]
    return ", ".join(names[:10]) + (", ..." if len(names) > 10 else "")


def optimize_ss_mask(model, example, sampler, config=None) -> AttributionMap:
    """One-image convenience wrapper around SoundnessSaliency.attribute."""
    engine = config if config is not None else SoundnessSaliency()
    return engine.attribute(model, example, sampler)


def _prep(image, spec):
    from ..preprocess import preprocess
    return preprocess(image, spec, normalize=False)
