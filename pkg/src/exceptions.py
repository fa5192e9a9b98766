class ShflBWError(ValueError):
    """Base class for every error raised by the toolkit."""


class ShapeMismatch(ShflBWError):
    """Operand shapes do not agree."""


class BadParams(ShflBWError):
    """A parameter is out of range or inconsistent with the operands."""


class NonConformantMask(ShflBWError):
    """A mask does not follow the requested sparsity pattern."""


class BadGeometry(ShflBWError):
    """Convolution geometry produces no valid output positions."""


class ContainerError(ShflBWError):
    """Base class for SMX1 container decoding failures."""


class BadMagic(ContainerError):
    pass


class UnsupportedVersion(ContainerError):
    pass


class CorruptPayload(ContainerError):
    pass
