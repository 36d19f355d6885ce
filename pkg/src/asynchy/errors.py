"""Exception hierarchy shared across the package."""


class AsynchyError(Exception):
    """Base class for all package-specific errors."""


class InputError(AsynchyError, ValueError):
    """Invalid argument values (out-of-range times, unsorted inputs, ...)."""


class ParameterError(InputError):
    """Invalid configuration parameters."""


class ContractError(InputError):
    """A precondition that the caller is responsible for does not hold,
    e.g. a functional without declared homogeneity degrees passed to a
    limit formula."""


class PathLookupError(InputError):
    """A requested time is not a member of a sampled path's time set.

    Paths are never interpolated; consumers must request the times they
    need when sampling."""


class SchemeSizeError(InputError):
    """An observation scheme is too large to materialize as arrays.

    Equidistant schemes of this size can still be analyzed through
    :class:`asynchy.schemes.GridScheme`, which keeps the grid virtual."""
