"""Toy classifier zoo: three CNN depths sharing one design, plus a small
vision transformer. All expose at least one named spatial activation layer
usable by activation-map attribution.
"""

import torch
import torch.nn as nn

from ..preprocess import InputSpec
from ..seeding import child_seed
from .adapters import SpatialLayer, TorchClassifier

CNN_WIDTHS = {
    "small": (16, 32),
    "medium": (16, 32, 64),
    "large": (24, 48, 96, 128),
}


class ToyCNN(nn.Module):
    """Stack of conv+relu blocks with 2x pooling, global average pool, and a
    linear head. Block outputs (post-relu) are the published spatial layers."""

    def __init__(self, widths, in_channels, num_classes):
        super().__init__()
        self.blocks = nn.ModuleList()
        prev = in_channels
        for w in widths:
            self.blocks.append(nn.Sequential(
                nn.Conv2d(prev, w, kernel_size=3, padding=1),
                nn.ReLU(),
            ))
            prev = w
        # pool after every block except a final 4th one, so deep variants
        # keep a usable spatial grid
        self.pool_flags = [i < 3 for i in range(len(widths))]
        self.pool = nn.MaxPool2d(2)
        self.head = nn.Linear(prev, num_classes)

    def forward(self, x):
        for block, do_pool in zip(self.blocks, self.pool_flags):
            x = block(x)
            if do_pool:
                x = self.pool(x)
        x = x.mean(dim=(2, 3))
        return self.head(x)


class TransformerBlock(nn.Module):
    def __init__(self, dim, heads, mlp_dim):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ln2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, mlp_dim), nn.GELU(), nn.Linear(mlp_dim, dim))

    def forward(self, x):
        h = self.ln1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.ln2(x))


class TinyViT(nn.Module):
    """Patch-embedding transformer classifier with mean-pooled tokens.

    Every token keeps a fixed patch-grid position (no class token), so block
    outputs reshape directly to a spatial activation grid.
    """

    def __init__(self, in_channels, image_size, patch, num_classes,
                 dim=64, depth=3, heads=4, mlp_dim=128):
        super().__init__()
        h, w = image_size
        if h % patch or w % patch:
            raise ValueError(
                f"image size {h}x{w} must be divisible by patch size {patch}")
        self.grid = (h // patch, w // patch)
        tokens = self.grid[0] * self.grid[1]
        self.patch_embed = nn.Conv2d(in_channels, dim, kernel_size=patch,
                                     stride=patch)
        self.pos_embed = nn.Parameter(torch.zeros(1, tokens, dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        self.blocks = nn.ModuleList(
            TransformerBlock(dim, heads, mlp_dim) for _ in range(depth))
        self.norm = nn.LayerNorm(dim)
        self.head = nn.Linear(dim, num_classes)

    def forward(self, x):
        x = self.patch_embed(x).flatten(2).transpose(1, 2)
        x = x + self.pos_embed
        for block in self.blocks:
            x = block(x)
        x = self.norm(x).mean(dim=1)
        return self.head(x)


def _seeded(seed, factory):
    # fork_rng keeps deterministic init from leaking into global RNG state
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return factory()


def build_toy_cnn(variant, input_spec, num_classes, seed=0, model_id=None):
    """Build one of the CNN variants behind the uniform classifier contract."""
    if variant not in CNN_WIDTHS:
        raise ValueError(f"unknown CNN variant {variant!r}; "
                         f"choose from {sorted(CNN_WIDTHS)}")
    if input_spec is None:
        input_spec = InputSpec(3, 32, 32)
    widths = CNN_WIDTHS[variant]
    module = _seeded(seed, lambda: ToyCNN(widths, input_spec.channels, num_classes))
    layers = {f"block{i + 1}": SpatialLayer(path=f"blocks.{i}", kind="spatial")
              for i in range(len(widths))}
    return TorchClassifier(
        module, model_id=model_id or f"cnn_{variant}", input_spec=input_spec,
        num_classes=num_classes, spatial_layers=layers,
        default_layer=f"block{len(widths)}", seed=seed,
        builder={"kind": "toy_cnn", "variant": variant})


def build_toy_vit(input_spec, num_classes, patch=8, seed=0, model_id=None,
                  dim=64, depth=3, heads=4, mlp_dim=128):
    """Build the small vision transformer behind the classifier contract."""
    if input_spec is None:
        input_spec = InputSpec(3, 32, 32)
    module = _seeded(seed, lambda: TinyViT(
        input_spec.channels, input_spec.size, patch, num_classes,
        dim=dim, depth=depth, heads=heads, mlp_dim=mlp_dim))
    layers = {f"block{i + 1}": SpatialLayer(path=f"blocks.{i}", kind="tokens",
                                            grid=module.grid)
              for i in range(depth)}
    return TorchClassifier(
        module, model_id=model_id or "vit_tiny", input_spec=input_spec,
        num_classes=num_classes, spatial_layers=layers,
        default_layer=f"block{depth}", seed=seed,
        builder={"kind": "tiny_vit", "patch": patch, "dim": dim,
                 "depth": depth, "heads": heads, "mlp_dim": mlp_dim})


def builtin_builder(model_id, input_spec, num_classes, seed=0):
    """Builder for the stock zoo ids (cnn_small/medium/large, vit_tiny)."""
    init_seed = child_seed(seed, "init", model_id)
    if model_id.startswith("cnn_"):
        return build_toy_cnn(model_id[len("cnn_"):], input_spec, num_classes,
                             seed=init_seed, model_id=model_id)
    if model_id == "vit_tiny":
        return build_toy_vit(input_spec, num_classes, patch=4, seed=init_seed,
                             model_id=model_id)
    raise ValueError(f"unknown builtin model id {model_id!r}")
