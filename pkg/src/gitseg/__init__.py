"""GI-tract MRI segmentation toolkit: RLE codec, preprocessing, gated
ensembling and volumetric scoring."""

__version__ = "0.1.0"
