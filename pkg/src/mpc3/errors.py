"""Exception types shared across the protocol stack."""


class Mpc3Error(Exception):
    """Base class for all library errors."""


class EncodingOverflowError(Mpc3Error):
    """Value magnitude does not fit the fixed-point range."""


class FramingError(Mpc3Error):
    """Malformed or inconsistent wire message."""


class HandshakeError(Mpc3Error):
    """Peer handshake failed (version / session / party id mismatch)."""


class TransportTimeoutError(Mpc3Error):
    """A blocking network operation exceeded its deadline."""


class ProtocolDesyncError(Mpc3Error):
    """Parties issued incompatible operation sequences."""


class IntegrityError(Mpc3Error):
    """Replicated share consistency violated."""


class DegenerateClassError(Mpc3Error):
    """A label class is empty; class weights are undefined."""
