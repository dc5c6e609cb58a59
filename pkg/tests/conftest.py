from pathlib import Path
from fractions import Fraction

import yaml
import pytest

import ultragap.solver
import ultragap.asymptote
import ultragap.dendrogram
from ultragap.metric import ArithmeticMode, ValidationReport, read_csv


def load_case(path: Path, mode: ArithmeticMode) -> ValidationReport:
    if path.suffix == ".json":
        m = ultragap.dendrogram.dendrogram_to_metric(ultragap.dendrogram.read_json(path, mode))
        return ValidationReport(metric=m, labels=m.labels)
    return read_csv(path, mode)


def pytest_collect_file(parent, file_path):
    if file_path.name == "test.yml":
        return YamlFile.from_parent(parent, path=file_path)


class YamlFile(pytest.File):
    def collect(self):
        spec = yaml.safe_load(self.path.open())
        filepath = self.path.parent / spec["Input File"]
        if not filepath.exists():
            return

        yield UltragapTest.from_parent(self, name=f"{spec['Test Name']}::kind", check="kind", spec=spec, arg=None)
        for p, _ in spec.get("Gaps", []):
            yield UltragapTest.from_parent(self, name=f"{spec['Test Name']}::gap-{p}", check="gap", spec=spec, arg=p)
        for key, check in (("Asymptote", "asymptote"), ("Constancy", "constancy"), ("Coterie sizes", "coteries")):
            if key in spec:
                yield UltragapTest.from_parent(
                    self, name=f"{spec['Test Name']}::{check}", check=check, spec=spec, arg=None
                )


class UltragapTestError(Exception):
    def __init__(self, check, expected, got):
        self.check = check
        self.expected = expected
        self.got = got


class UltragapTest(pytest.Item):
    def __init__(self, *, check, spec, arg, **kwargs):
        super().__init__(**kwargs)
        self.check = check
        self.spec = spec
        self.arg = arg

    def _load(self):
        mode = ArithmeticMode(self.spec.get("Mode", "float"))
        return load_case(self.path.parent / self.spec["Input File"], mode)

    def _test_kind(self, report):
        got = report.kind.value if report.kind is not None else None
        if got != self.spec["Kind"]:
            raise UltragapTestError("kind", self.spec["Kind"], got)

    def _test_gap(self, report):
        expected = dict((p, v) for p, v in self.spec["Gaps"])[self.arg]
        expected = float(Fraction(str(expected)))
        tolerance = float(self.spec.get("Gap tolerance", 1e-9))
        result = ultragap.solver.gap(report.metric, float(self.arg))
        if abs(result.value - expected) > tolerance:
            raise UltragapTestError(f"gap at p={self.arg}", expected, result.value)

    def _tree(self, report):
        return ultragap.dendrogram.tree(ultragap.dendrogram.build_dendrogram(report.metric))

    def _test_asymptote(self, report):
        expected = Fraction(str(self.spec["Asymptote"]))
        got = ultragap.asymptote.gamma_infinity(self._tree(report))
        if got != expected:
            raise UltragapTestError("asymptote", expected, got)

    def _test_constancy(self, report):
        got = ultragap.asymptote.classify(report.metric).kind.value
        if got != self.spec["Constancy"]:
            raise UltragapTestError("constancy", self.spec["Constancy"], got)

    def _test_coteries(self, report):
        profile = ultragap.dendrogram.coterie_profile(self._tree(report))
        expected = (sorted(self.spec["Coterie sizes"]), list(self.spec.get("Uncovered", [])))
        got = (sorted(profile.sizes), [report.metric.labels[i] for i in profile.uncovered])
        if got != expected:
            raise UltragapTestError("coteries", expected, got)

    def runtest(self):
        xfail = self.spec.get("Xfail", [])
        if self.check in xfail:
            pytest.xfail("known issue")

        report = self._load()
        getattr(self, f"_test_{self.check}")(report)

    def reportinfo(self):
        return self.path, 0, "usecase: %s" % self.name

    def repr_failure(self, excinfo):
        if isinstance(excinfo.value, UltragapTestError):
            return "\n".join(
                [
                    f"ultragap {excinfo.value.check} check failed:",
                    "   expected: %s" % str(excinfo.value.expected),
                    "   got: %s" % str(excinfo.value.got),
                ]
            )
        return super().repr_failure(excinfo)
