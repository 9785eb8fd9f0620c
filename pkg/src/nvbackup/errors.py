"""Exception hierarchy shared by all modules."""


class NVBackupError(Exception):
    """Base class for every error raised by this package."""


class TraceError(NVBackupError):
    """Problem with trace contents (CLI maps these to exit code 3)."""


class MalformedLine(TraceError):
    def __init__(self, lineno, content, reason=""):
        self.lineno = lineno
        self.content = content
        msg = f"line {lineno}: malformed trace line {content!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class NonMonotonicCycle(TraceError):
    def __init__(self, lineno, cycle, previous):
        self.lineno = lineno
        super().__init__(f"line {lineno}: cycle {cycle} is lower than previous cycle {previous}")


class MisalignedAddress(TraceError):
    def __init__(self, lineno, addr):
        self.lineno = lineno
        self.addr = addr
        super().__init__(f"line {lineno}: address {addr:#x} is not 32-bit word aligned")


class TraceIOError(TraceError):
    pass


class ScheduleError(NVBackupError):
    pass


class ScheduleTooShort(ScheduleError):
    pass


class InvalidIntervalLength(ScheduleError):
    pass


class InvalidProbability(ScheduleError):
    pass


class InvalidBlockSize(NVBackupError):
    pass


class MemTooSmall(NVBackupError):
    pass


class InvalidCacheConfig(NVBackupError):
    pass


class MissingParams(NVBackupError):
    pass


class DivisionByZeroOverhead(NVBackupError):
    pass


class ZeroTotal(NVBackupError):
    pass


class ConfigError(NVBackupError):
    """Invalid experiment configuration (CLI exit code 2)."""
