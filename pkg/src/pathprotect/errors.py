"""Exception hierarchy shared by all pathprotect modules."""


class PathProtectError(Exception):
    """Base class for every error raised by this package."""


class MalformedPacket(PathProtectError):
    pass


class RangeError(PathProtectError, ValueError):
    """A header field or sequence number is outside its representable range."""


class AlreadyProtected(PathProtectError):
    pass


class WrongLayer(PathProtectError):
    """The requested layer is not at the top of the packet's header stack."""


class ParamError(PathProtectError, ValueError):
    pass


class UnknownCid(PathProtectError):
    def __init__(self, cid):
        super().__init__(f"no protection connection with cid {cid}")
        self.cid = cid


class DropDecision(PathProtectError):
    """Raised inside the ingress pipeline when a packet is deliberately dropped.

    ``reason`` is one of the counter names used by :class:`pathprotect.node.Node`
    (``duplicate``, ``unknown_cid``, ``no_route``, ``ttl_expired``, ...).
    """

    def __init__(self, reason, detail=""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class ValidationError(PathProtectError, ValueError):
    """A scenario or configuration failed a structural check.

    ``path`` points at the offending field, e.g. ``links[2].loss``.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class ParseError(ValidationError):
    """The configuration text could not be read against the document schema."""

    def __init__(self, message, path="", line=None):
        super().__init__(message, path)
        self.line = line
        if line is not None:
            where = f"line {line}" + (f" ({path})" if path else "")
            self.args = (f"{where}: {message}",)


class ConflictError(PathProtectError):
    """A table entry clashes with one already installed."""
