"""Компактный U-Net денойзера с кросс-вниманием к текстовым эмбеддингам."""

import math
from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from ...control.services.injection import inject
from ..domain.value_objects import ModelSpec


def timestep_embedding(
    timesteps: torch.Tensor,
    dim: int,
    max_period: float = 10000.0,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Синусоидальное кодирование шага диффузии (B,) -> (B, dim)."""
    half = dim // 2
    exponent = -math.log(max_period) * torch.arange(half, dtype=torch.float64) / max(half, 1)
    freqs = torch.exp(exponent).to(timesteps.device)
    args = timesteps.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb.to(dtype)


def norm_groups(channels: int) -> int:
    for groups in (8, 4, 2, 1):
        if channels % groups == 0:
            return groups
    return 1


class ResBlock(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, temb_dim: int) -> None:
        super().__init__()
        self.norm1 = nn.GroupNorm(norm_groups(in_channels), in_channels)
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.temb_proj = nn.Linear(temb_dim, out_channels)
        self.norm2 = nn.GroupNorm(norm_groups(out_channels), out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.skip = (
            nn.Conv2d(in_channels, out_channels, 1)
            if in_channels != out_channels
            else nn.Identity()
        )

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.temb_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return self.skip(x) + h


class CrossAttentionBlock(nn.Module):
    """Внимание пространственных признаков к последовательности текстовых эмбеддингов."""

    def __init__(self, channels: int, context_dim: int, heads: int) -> None:
        super().__init__()
        self.norm = nn.GroupNorm(norm_groups(channels), channels)
        self.attn = nn.MultiheadAttention(
            channels,
            heads,
            kdim=context_dim,
            vdim=context_dim,
            batch_first=True,
        )

    def forward(self, h: torch.Tensor, context: torch.Tensor) -> torch.Tensor:
        batch, channels, height, width = h.shape
        query = self.norm(h).flatten(2).transpose(1, 2)
        out, _ = self.attn(query, context, context, need_weights=False)
        return h + out.transpose(1, 2).reshape(batch, channels, height, width)


class Downsample(nn.Module):
    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Upsample(nn.Module):
    def __init__(self, channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class UNetEncoder(nn.Module):
    """
    Энкодер и средний блок U-Net.

    Возвращает выход среднего блока, skip-признаки каждого уровня
    и эмбеддинг шага. Именно эта часть копируется в ветвь управления.
    """

    def __init__(
        self,
        in_channels: int,
        base_width: int,
        channel_mult: Sequence[int],
        context_dim: int,
        attention_heads: int,
    ) -> None:
        super().__init__()
        self.base_width = base_width
        temb_dim = base_width * 4
        self.time_mlp = nn.Sequential(
            nn.Linear(base_width, temb_dim),
            nn.SiLU(),
            nn.Linear(temb_dim, temb_dim),
        )
        self.conv_in = nn.Conv2d(in_channels, base_width, 3, padding=1)

        self.down_blocks = nn.ModuleList()
        self.downsamplers = nn.ModuleList()
        channels = base_width
        for level, mult in enumerate(channel_mult):
            out_channels = base_width * mult
            self.down_blocks.append(ResBlock(channels, out_channels, temb_dim))
            channels = out_channels
            last = level == len(channel_mult) - 1
            self.downsamplers.append(nn.Identity() if last else Downsample(channels))

        self.mid_block1 = ResBlock(channels, channels, temb_dim)
        self.mid_attn = CrossAttentionBlock(channels, context_dim, attention_heads)
        self.mid_block2 = ResBlock(channels, channels, temb_dim)
        self.site_channels = [base_width * m for m in channel_mult] + [channels]

    def forward(
        self,
        x: torch.Tensor,
        timesteps: torch.Tensor,
        context: torch.Tensor,
    ) -> tuple[torch.Tensor, list[torch.Tensor], torch.Tensor]:
        temb = self.time_mlp(timestep_embedding(timesteps, self.base_width, dtype=x.dtype))
        h = self.conv_in(x)
        skips = []
        for block, down in zip(self.down_blocks, self.downsamplers):
            h = block(h, temb)
            skips.append(h)
            h = down(h)
        h = self.mid_block1(h, temb)
        h = self.mid_attn(h, context)
        h = self.mid_block2(h, temb)
        return h, skips, temb


class TinyUNet(nn.Module):
    """
    Денойзер eps_theta(z_t, p, t[, c]).

    Вход: конкатенация (z_t, латентная маска, латент замаскированного изображения).
    Выход: предсказанный шум формы z_t.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        base_width: int = 32,
        channel_mult: Sequence[int] = (1, 2),
        context_dim: int = 64,
        attention_heads: int = 4,
    ) -> None:
        super().__init__()
        self.channel_mult = tuple(channel_mult)
        self.encoder = UNetEncoder(
            in_channels, base_width, channel_mult, context_dim, attention_heads
        )
        temb_dim = base_width * 4

        self.up_blocks = nn.ModuleList()
        self.upsamplers = nn.ModuleList()
        channels = base_width * channel_mult[-1]
        for level in reversed(range(len(channel_mult))):
            skip_channels = base_width * channel_mult[level]
            self.up_blocks.append(ResBlock(channels + skip_channels, skip_channels, temb_dim))
            channels = skip_channels
            self.upsamplers.append(Upsample(channels) if level > 0 else nn.Identity())

        self.norm_out = nn.GroupNorm(norm_groups(channels), channels)
        self.conv_out = nn.Conv2d(channels, out_channels, 3, padding=1)

    @property
    def injection_sites(self) -> int:
        return len(self.channel_mult) + 1

    @property
    def downscale(self) -> int:
        return 2 ** (len(self.channel_mult) - 1)

    def decode(
        self,
        h: torch.Tensor,
        skips: Sequence[torch.Tensor],
        temb: torch.Tensor,
    ) -> torch.Tensor:
        for block, up, skip in zip(self.up_blocks, self.upsamplers, reversed(skips)):
            h = block(torch.cat([h, skip], dim=1), temb)
            h = up(h)
        return self.conv_out(F.silu(self.norm_out(h)))

    def forward(
        self,
        x: torch.Tensor,
        timesteps: torch.Tensor,
        context: torch.Tensor,
        control: Optional[Sequence[torch.Tensor]] = None,
    ) -> torch.Tensor:
        h, skips, temb = self.encoder(x, timesteps, context)
        if control is not None:
            sites = inject([*skips, h], control)
            skips, h = sites[:-1], sites[-1]
        return self.decode(h, skips, temb)


def build_denoiser(spec: ModelSpec) -> TinyUNet:
    return TinyUNet(
        in_channels=spec.denoiser_in_channels,
        out_channels=spec.latent_channels,
        base_width=spec.base_width,
        channel_mult=spec.channel_mult,
        context_dim=spec.context_dim,
        attention_heads=spec.attention_heads,
    )
