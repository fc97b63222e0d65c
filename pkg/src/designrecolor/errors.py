"""Error types raised by the recoloring pipeline.

Every error carries a ``stage`` (which pipeline step failed) and a short
machine-readable ``code`` so the CLI and HTTP service can tag failures
uniformly.
"""


class RecolorError(Exception):
    stage = "pipeline"
    code = "error"

    def __init__(self, message, *, code=None, suggestion=None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.suggestion = suggestion

    def tagged(self):
        return f"[{self.stage}:{self.code}] {self}"


class BundleError(RecolorError):
    stage = "bundle"


class ParseError(RecolorError):
    stage = "parser"


class PredictionError(RecolorError):
    stage = "predict"


class PaletteError(RecolorError):
    stage = "palette"


class MaskError(RecolorError):
    stage = "mask"


class RefineError(RecolorError):
    stage = "refine"


class SelectError(RecolorError):
    stage = "select"


class DatasetError(RecolorError):
    stage = "dataset"
