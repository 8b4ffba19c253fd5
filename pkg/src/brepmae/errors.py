"""Exception hierarchy shared by all subpackages."""


class BRepMAEError(Exception):
    """Base class for every error raised by this package."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


# -- parsing / geometry -----------------------------------------------------


class SchemaError(BRepMAEError):
    code = "schema"

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path

    def to_dict(self):
        d = super().to_dict()
        d["path"] = self.path
        return d


class FaceReferenceError(BRepMAEError):
    """An edge names a face id that does not exist."""

    code = "reference"


class DomainError(BRepMAEError):
    code = "domain"


class UnsupportedKind(BRepMAEError):
    code = "unsupported_kind"


class DegenerateExtent(BRepMAEError):
    code = "degenerate_extent"


class PreimageError(BRepMAEError):
    code = "preimage"


class InvalidSolid(BRepMAEError):
    code = "invalid_solid"

    def __init__(self, defects):
        super().__init__("; ".join(str(d) for d in defects))
        self.defects = list(defects)


# -- data / numerics --------------------------------------------------------


class EmptyDataset(BRepMAEError):
    code = "empty_dataset"


class ShapeError(BRepMAEError, ValueError):
    code = "shape"


class NotScalar(BRepMAEError):
    code = "not_scalar"


class RangeError(BRepMAEError, ValueError):
    code = "range"


# -- model / training -------------------------------------------------------


class TooFewNodes(BRepMAEError):
    code = "too_few_nodes"


class EmptyMask(BRepMAEError):
    code = "empty_mask"


class MissingNamespace(BRepMAEError):
    code = "missing_namespace"


class LabelOutOfRange(BRepMAEError, ValueError):
    code = "label_out_of_range"


class EmptyInput(BRepMAEError, ValueError):
    code = "empty_input"


class InsufficientModels(BRepMAEError):
    code = "insufficient_models"


class CheckpointError(BRepMAEError):
    code = "checkpoint"


class ConfigError(BRepMAEError):
    code = "config"


# -- synthetic data ---------------------------------------------------------


class OverlapError(BRepMAEError):
    code = "overlap"


class PlacementError(BRepMAEError):
    code = "placement"


class InsufficientParts(BRepMAEError):
    code = "insufficient_parts"
