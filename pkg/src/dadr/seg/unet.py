"""UNet segmentation model assembled from shape-checked layer spec blocks."""

import torch
from torch import Tensor, nn

from ..errors import ConfigError
from ..nn_core import LayerSpec, SpecNet, chain_output_shape


def _double_conv(cin: int, cout: int) -> list[LayerSpec]:
    return [
        LayerSpec.conv(cin, cout, kernel=3, padding=1, norm="in", activation="relu"),
        LayerSpec.conv(cout, cout, kernel=3, padding=1, norm="in", activation="relu"),
    ]


class UNet(nn.Module):
    """Encoder/decoder with skip connections; logits at input resolution.

    Input spatial size must be divisible by 2**depth.
    """

    def __init__(self, depth: int = 3, base_channels: int = 16, in_channels: int = 1,
                 generator: torch.Generator | None = None):
        super().__init__()
        if depth < 1:
            raise ConfigError(f"depth must be >= 1, got {depth}")
        self.depth = depth
        self.base_channels = base_channels
        nominal = 2 ** depth  # smallest legal input; chains are validated on it

        def block(specs, size, channels):
            return SpecNet(specs, (channels, size, size), strict_input=False)

        self.encoders = nn.ModuleList()
        self.downs = nn.ModuleList()
        size = nominal
        cin = in_channels
        for i in range(depth):
            c = base_channels * 2 ** i
            self.encoders.append(block(_double_conv(cin, c), size, cin))
            self.downs.append(block([LayerSpec.downsample(c, c, activation="relu")], size, c))
            size //= 2
            cin = c
        c_bottom = base_channels * 2 ** depth
        self.bottleneck = block(_double_conv(cin, c_bottom), size, cin)

        self.ups = nn.ModuleList()
        self.decoders = nn.ModuleList()
        c = c_bottom
        for i in reversed(range(depth)):
            skip = base_channels * 2 ** i
            self.ups.append(block([LayerSpec.upsample(c, skip, activation="relu")], size, c))
            size *= 2
            self.decoders.append(block(_double_conv(2 * skip, skip), size, 2 * skip))
            c = skip
        self.head = block([LayerSpec.conv(base_channels, 1, kernel=1, padding=0)], size, base_channels)

        if generator is not None:
            from ..nn_core import init_parameters

            init_parameters(self, generator)

    def validate(self, image_size: int) -> None:
        """Type-check every block's spec chain at a concrete input size."""
        if image_size % (2 ** self.depth) != 0:
            raise ConfigError(f"input size {image_size} not divisible by 2^{self.depth}")
        size, cin = image_size, self.encoders[0].input_shape[0]
        for enc, down in zip(self.encoders, self.downs):
            shape = chain_output_shape(enc.specs, (cin, size, size))
            shape = chain_output_shape(down.specs, shape)
            cin, size = shape[0], shape[1]
        chain_output_shape(self.bottleneck.specs, (cin, size, size))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise ConfigError(f"expected (batch, channels, h, w) input, got {tuple(x.shape)}")
        if x.shape[2] % (2 ** self.depth) or x.shape[3] % (2 ** self.depth):
            raise ConfigError(
                f"input spatial size {tuple(x.shape[2:])} not divisible by 2^{self.depth}"
            )
        skips = []
        for enc, down in zip(self.encoders, self.downs):
            x = enc(x)
            skips.append(x)
            x = down(x)
        x = self.bottleneck(x)
        for up, dec, skip in zip(self.ups, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([x, skip], dim=1))
        return self.head(x)
