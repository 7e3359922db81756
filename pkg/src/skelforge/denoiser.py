"""Conditional transformer denoiser.

Maps (noisy feature sequence, diffusion step, action label) to (predicted
clean sequence, class logits). Timestep and label embeddings are fused into
a single prefix token that (a) leads the encoder input and (b) re-enters
the decoder as its first token after passing through the encoder. Both
stacks are pre-norm self-attention transformers over the noisy sequence.

Stochastic masking has two entry points: ``internal_dropout`` regularizes
training (both stacks), while ``dropout_override`` enables masking inside
the decoder stack at sampling time to diversify generations. All masks are
drawn from an explicit torch.Generator so runs are reproducible.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError
from .features import FEATURE_WIDTH


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int
    d_model: int = 64
    layers: int = 4
    heads: int = 4
    feed_forward_dim: int = 0  # 0 -> 4 * d_model
    max_frames: int = 48
    internal_dropout: float = 0.0
    feature_width: int = FEATURE_WIDTH
    classifier_hidden: int = 0  # 0 -> d_model

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.d_model % self.heads != 0:
            raise ConfigError("d_model must be divisible by heads")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if not 0.0 <= self.internal_dropout < 1.0:
            raise ConfigError("internal_dropout must be in [0, 1)")
        if self.feed_forward_dim == 0:
            object.__setattr__(self, "feed_forward_dim", 4 * self.d_model)
        if self.classifier_hidden == 0:
            object.__setattr__(self, "classifier_hidden", self.d_model)

    def to_json(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "d_model": self.d_model,
            "layers": self.layers,
            "heads": self.heads,
            "feed_forward_dim": self.feed_forward_dim,
            "max_frames": self.max_frames,
            "internal_dropout": self.internal_dropout,
            "feature_width": self.feature_width,
            "classifier_hidden": self.classifier_hidden,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(**{k: data[k] for k in data})


def sinusoidal_table(length: int, dim: int) -> torch.Tensor:
    """Standard sin/cos positional table of shape (length, dim)."""
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    half = dim // 2
    freq = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float64) / half)
    table = torch.zeros(length, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * freq)
    table[:, 1::2] = torch.cos(position * freq)
    return table


def _masked(x: torch.Tensor, rate: float, generator: torch.Generator | None) -> torch.Tensor:
    """Inverted dropout with an explicit generator."""
    if rate <= 0.0:
        return x
    keep = 1.0 - rate
    mask = torch.rand(
        x.shape, generator=generator, dtype=x.dtype, device=x.device
    ) < keep
    return x * mask.to(x.dtype) / keep


class SelfAttention(nn.Module):
    def __init__(self, d_model: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = d_model // heads
        self.in_proj = nn.Linear(d_model, 3 * d_model)
        self.out_proj = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        B, S, _ = x.shape
        qkv = self.in_proj(x).reshape(B, S, 3, self.heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)
        attn = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(self.head_dim), dim=-1)
        out = (attn @ v).permute(0, 2, 1, 3).reshape(B, S, -1)
        return self.out_proj(out)


class Block(nn.Module):
    """Pre-norm transformer block; `rate` masks the attention output
    projection and the feed-forward activations."""

    def __init__(self, d_model: int, heads: int, ff_dim: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = SelfAttention(d_model, heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.ff1 = nn.Linear(d_model, ff_dim)
        self.ff2 = nn.Linear(ff_dim, d_model)

    def forward(
        self, x: torch.Tensor, rate: float, generator: torch.Generator | None
    ) -> torch.Tensor:
        x = x + _masked(self.attn(self.norm1(x)), rate, generator)
        h = _masked(F.gelu(self.ff1(self.norm2(x))), rate, generator)
        return x + self.ff2(h)


class Denoiser(nn.Module):
    """Transformer encoder-decoder with a conditioning prefix token."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.d_model
        self.input_proj = nn.Linear(config.feature_width, d)
        self.register_buffer(
            "pos_table", sinusoidal_table(config.max_frames, d).to(torch.float32)
        )
        self.time_mlp = nn.Sequential(nn.Linear(d, d), nn.GELU(), nn.Linear(d, d))
        self.label_mlp = nn.Sequential(
            nn.Linear(config.num_classes, d), nn.GELU(), nn.Linear(d, d)
        )
        self.prefix_proj = nn.Linear(2 * d, d)
        self.encoder = nn.ModuleList(
            Block(d, config.heads, config.feed_forward_dim) for _ in range(config.layers)
        )
        self.encoder_norm = nn.LayerNorm(d)
        self.decoder = nn.ModuleList(
            Block(d, config.heads, config.feed_forward_dim) for _ in range(config.layers)
        )
        self.decoder_norm = nn.LayerNorm(d)
        self.out_proj = nn.Linear(d, config.feature_width)
        self.cls_head = nn.Sequential(
            nn.Linear(d, config.classifier_hidden),
            nn.GELU(),
            nn.Linear(config.classifier_hidden, config.num_classes),
        )

    def _timestep_embedding(self, t: torch.Tensor) -> torch.Tensor:
        d = self.config.d_model
        half = d // 2
        dtype = self.input_proj.weight.dtype
        freq = torch.exp(
            -math.log(10000.0) * torch.arange(half, dtype=dtype, device=t.device) / half
        )
        ang = t.to(dtype).unsqueeze(1) * freq
        emb = torch.zeros(t.shape[0], d, dtype=dtype, device=t.device)
        emb[:, 0::2] = torch.sin(ang)
        emb[:, 1::2] = torch.cos(ang)
        return emb

    def forward(
        self,
        x_t: torch.Tensor,
        t: torch.Tensor,
        labels: torch.Tensor,
        train: bool = False,
        dropout_override: float | None = None,
        generator: torch.Generator | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Predict (x0_hat, class logits) from a noisy batch.

        x_t: (B, T, feature_width); t, labels: (B,) long. In eval mode all
        masking is off unless ``dropout_override`` is given, which masks the
        decoder stack only (the sampling-time diversity mechanism).
        """
        if x_t.dim() != 3 or x_t.shape[-1] != self.config.feature_width:
            raise ValueError(f"x_t must be (B, T, {self.config.feature_width})")
        B, T, _ = x_t.shape
        if T > self.config.max_frames:
            raise ValueError(f"sequence length {T} exceeds max_frames {self.config.max_frames}")
        t = torch.as_tensor(t, device=x_t.device, dtype=torch.long)
        if t.dim() == 0:
            t = t.expand(B)
        labels = torch.as_tensor(labels, device=x_t.device, dtype=torch.long)
        if labels.dim() == 0:
            labels = labels.expand(B)

        enc_rate = self.config.internal_dropout if train else 0.0
        if train:
            dec_rate = self.config.internal_dropout
        else:
            dec_rate = float(dropout_override) if dropout_override else 0.0

        dtype = self.input_proj.weight.dtype
        tokens = self.input_proj(x_t.to(dtype)) + self.pos_table[:T].to(dtype)
        t_emb = self.time_mlp(self._timestep_embedding(t))
        onehot = F.one_hot(labels, self.config.num_classes).to(dtype)
        c_emb = self.label_mlp(onehot)
        prefix = self.prefix_proj(torch.cat([t_emb, c_emb], dim=-1))

        h = torch.cat([prefix.unsqueeze(1), tokens], dim=1)
        for block in self.encoder:
            h = block(h, enc_rate, generator)
        cond = self.encoder_norm(h)[:, 0]

        g = torch.cat([cond.unsqueeze(1), tokens], dim=1)
        for block in self.decoder:
            g = block(g, dec_rate, generator)
        g = self.decoder_norm(g)

        x0_hat = self.out_proj(g[:, 1:])
        logits = self.cls_head(g[:, 1:].mean(dim=1))
        return x0_hat, logits


def init_parameters(config: ModelConfig, seed: int) -> Denoiser:
    """Fresh model with deterministic fan-scaled uniform initialization.

    Biases start at zero; the final output projection is zero-initialized so
    the untrained model predicts x0_hat = 0 for any input.
    """
    model = Denoiser(config)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, module in model.named_modules():
            if isinstance(module, nn.Linear):
                if module is model.out_proj:
                    module.weight.zero_()
                else:
                    fan_in, fan_out = module.in_features, module.out_features
                    bound = math.sqrt(6.0 / (fan_in + fan_out))
                    module.weight.uniform_(-bound, bound, generator=gen)
                module.bias.zero_()
    return model


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def parameter_groups(model: nn.Module) -> dict[str, torch.Tensor]:
    return dict(model.named_parameters())
