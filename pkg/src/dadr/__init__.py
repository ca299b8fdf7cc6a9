"""Cross-domain adaptation for segmentation via disentangled content/style
representations, evaluated on a synthetic two-domain benchmark."""

__version__ = "0.1.0"
