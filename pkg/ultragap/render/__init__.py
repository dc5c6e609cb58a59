from enum import Enum


class Verbosity(int, Enum):
    DEFAULT = 0
    VERBOSE = 1


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"
