"""Error types raised by the pipeline. Parameter misuse raises plain ValueError."""


class DatasetError(RuntimeError):
    """Dataset-level problem: empty class, bad manifest, label out of range."""


class ImageDecodeError(DatasetError):
    """A single image file could not be decoded; message carries the path."""


class TrainingDiverged(RuntimeError):
    """Non-finite loss during training; message names the epoch."""


class OptimizationError(RuntimeError):
    """Non-finite mask objective mid-run; message names the step index."""


class CacheError(RuntimeError):
    """Corrupt or unreadable attribution cache entry; message names the key."""


class WeightFormatError(RuntimeError):
    """Weight container has the wrong version, manifest, or array shapes."""


class MissingFeatureError(RuntimeError):
    """Feature-mode evaluation is missing inputs; message lists the image ids."""

    def __init__(self, image_ids):
        self.image_ids = sorted(image_ids)
        shown = ", ".join(self.image_ids[:10])
        more = "" if len(self.image_ids) <= 10 else f" (+{len(self.image_ids) - 10} more)"
        super().__init__(f"missing features for {len(self.image_ids)} image(s): {shown}{more}")


class ReportError(RuntimeError):
    """Report assembly or rendering failed (incomplete grid, empty report)."""
