"""Neural sidecars for sketchlab datasets.

Consumes the primary toolkit only through its documented interfaces:
manifest JSONL, PNG image directories, sidecar JSONL, and the `sketchlab`
CLI. Provides pretrained-scorer sidecar emission (when a scorer backend is
available locally) and a desk-scale conditional denoiser exercising the
noise-prediction training objective on dataset manifests.
"""

__version__ = "0.1.0"
