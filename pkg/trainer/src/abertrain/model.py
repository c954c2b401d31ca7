"""The projector network: a fully convolutional residual encoder-decoder.

Input is 6 channels (image plus the per-pixel prior-strength map), output
is 3 channels at the same resolution.  Attribute names are chosen so the
state dict keys coincide one-to-one with the UABC tensor names.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .formats import read_uabc, tensor_names, write_uabc

IN_CHANNELS = 6
OUT_CHANNELS = 3


class ResBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        t = F.relu(self.conv1(x))
        t = self.conv2(t)
        return F.relu(x + t)


class BlockStack(nn.Module):
    def __init__(self, channels: int, blocks: int):
        super().__init__()
        self.blocks = blocks
        for b in range(blocks):
            setattr(self, f"block{b}", ResBlock(channels))

    def forward(self, x):
        for b in range(self.blocks):
            x = getattr(self, f"block{b}")(x)
        return x


class ProjectorNet(nn.Module):
    def __init__(
        self,
        scales: int = 3,
        widths: tuple[int, ...] = (32, 64, 128),
        blocks_per_scale: int = 2,
    ):
        super().__init__()
        if len(widths) != scales:
            raise ValueError(f"widths {widths} must list one width per scale")
        self.scales = scales
        self.widths = tuple(widths)
        self.blocks_per_scale = blocks_per_scale
        self.head = nn.Conv2d(IN_CHANNELS, widths[0], 3, padding=1)
        for s in range(scales):
            setattr(self, f"enc{s}", BlockStack(widths[s], blocks_per_scale))
            if s < scales - 1:
                setattr(
                    self, f"down{s}", nn.Conv2d(widths[s], widths[s + 1], 3, stride=2, padding=1)
                )
        for s in range(scales - 2, -1, -1):
            setattr(self, f"up{s}", nn.Conv2d(widths[s + 1], widths[s], 3, padding=1))
            setattr(self, f"fuse{s}", nn.Conv2d(2 * widths[s], widths[s], 3, padding=1))
            setattr(self, f"dec{s}", BlockStack(widths[s], blocks_per_scale))
        self.tail = nn.Conv2d(widths[0], OUT_CHANNELS, 3, padding=1)

    def forward(self, x):
        x = F.relu(self.head(x))
        skips = []
        for s in range(self.scales):
            x = getattr(self, f"enc{s}")(x)
            if s < self.scales - 1:
                skips.append(x)
                x = F.relu(getattr(self, f"down{s}")(x))
        for s in range(self.scales - 2, -1, -1):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = F.relu(getattr(self, f"up{s}")(x))
            x = F.relu(getattr(self, f"fuse{s}")(torch.cat([x, skips[s]], dim=1)))
            x = getattr(self, f"dec{s}")(x)
        return self.tail(x)

    def project(self, x):
        """Forward pass for arbitrary sizes: replicate-pad to a multiple of
        2**(scales-1) on the bottom/right, then crop back."""
        h, w = x.shape[-2:]
        div = 2 ** (self.scales - 1)
        pad_h = (-h) % div
        pad_w = (-w) % div
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="replicate")
        out = self.forward(x)
        return out[..., :h, :w]


def export_weights(net: ProjectorNet, path) -> None:
    """Serialize the network in the UABC layout, canonical tensor order."""
    state = net.state_dict()
    expected = tensor_names(net.scales, net.widths, net.blocks_per_scale)
    tensors = {}
    for name in expected:
        if name not in state:
            raise KeyError(f"state dict is missing {name!r}")
        tensors[name] = state[name].detach().cpu().numpy()
    write_uabc(path, net.scales, net.widths, net.blocks_per_scale, tensors)


def load_net(path) -> ProjectorNet:
    """Build a ProjectorNet from a UABC file (for fine-tuning or inference)."""
    scales, widths, blocks_per_scale, tensors = read_uabc(path)
    net = ProjectorNet(scales=scales, widths=widths, blocks_per_scale=blocks_per_scale)
    state = {name: torch.from_numpy(data) for name, data in tensors.items()}
    net.load_state_dict(state)
    return net
