"""sketchlab: sketch corruption pairs, tracking ingest, and faithfulness metrics."""

__version__ = "0.1.0"
