import numpy as np
import pandas as pd
import pytest

from ifr.config import PANEL_COLUMNS
from ifr.exceptions import DataValidationError
from ifr.connectors.panel_csv import (
    PanelDataset,
    PanelSchema,
    limits_frame,
    load_panel,
    panel_from_frame,
    panel_spec,
    panel_to_datasets,
    save_panel,
    write_json_atomic,
)

HEADER = "entity,time,variable,lower,upper\n"


def _panel_text(entities=("b", "a"), times=(0.0, 0.5, 1.0), variables=("y", "x")):
    lines = [HEADER.strip()]
    for i, e in enumerate(entities):
        for v in variables:
            for t in times:
                lo = i + t
                lines.append(f"{e},{t},{v},{lo},{lo + 1.0}")
    return "\n".join(lines) + "\n"


class TestLoadPanel:
    def test_shapes_and_order(self, write_csv):
        panel = load_panel(write_csv(_panel_text()))
        assert panel.entities == ["b", "a"]
        assert panel.variables == ["y", "x"]
        np.testing.assert_array_equal(panel.grid, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(panel.lower["x"][1], [1.0, 1.5, 2.0])
        np.testing.assert_allclose(panel.upper["y"][0], [1.0, 1.5, 2.0])

    def test_load_is_logged(self, write_csv, caplog):
        with caplog.at_level("INFO", logger="ifr.connectors.panel_csv"):
            load_panel(write_csv(_panel_text()))
        assert "2 entities, 3 times, variables ['y', 'x']" in caplog.text

    def test_row_order_does_not_matter(self, write_csv):
        text = _panel_text()
        header, *rows = text.strip().split("\n")
        shuffled = "\n".join([header] + rows[::-1]) + "\n"
        panel = load_panel(write_csv(shuffled))
        np.testing.assert_array_equal(panel.grid, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(panel.lower["y"][panel.entities.index("a")], [1.0, 1.5, 2.0])

    def test_numeric_entity_names_stay_strings(self, write_csv):
        panel = load_panel(write_csv(_panel_text(entities=("007", "12"))))
        assert panel.entities == ["007", "12"]

    def test_custom_schema(self):
        frame = pd.DataFrame({
            "site": ["s1", "s1"], "day": [0.0, 1.0], "series": ["y", "y"],
            "lo": [1.0, 2.0], "hi": [3.0, 4.0],
        })
        schema = PanelSchema(entity="site", time="day", variable="series", lower="lo", upper="hi")
        panel = panel_from_frame(frame, schema)
        np.testing.assert_array_equal(panel.upper["y"], [[3.0, 4.0]])


class TestPanelValidation:
    def test_inverted_row_named(self, write_csv):
        text = HEADER + "a,0,y,1.0,2.0\na,1,y,5.0,2.0\n"
        with pytest.raises(DataValidationError, match="lower exceeds upper on rows 3"):
            load_panel(write_csv(text))

    def test_non_numeric_value(self, write_csv):
        text = HEADER + "a,0,y,1.0,2.0\na,1,y,low,2.0\n"
        with pytest.raises(DataValidationError, match="non-numeric.*rows 3"):
            load_panel(write_csv(text))

    def test_missing_cell(self, write_csv):
        text = HEADER + "a,0,y,1.0,2.0\na,1,y,,2.0\n"
        with pytest.raises(DataValidationError, match="missing cells on rows 3"):
            load_panel(write_csv(text))

    def test_duplicate_rows(self, write_csv):
        text = HEADER + "a,0,y,1.0,2.0\na,0,y,1.0,2.0\n"
        with pytest.raises(DataValidationError, match="duplicate"):
            load_panel(write_csv(text))

    def test_ragged_panel(self, write_csv):
        text = HEADER + "a,0,y,1.0,2.0\na,1,y,1.0,2.0\nb,0,y,1.0,2.0\n"
        with pytest.raises(DataValidationError, match="ragged panel: 1"):
            load_panel(write_csv(text))

    def test_missing_column(self, write_csv):
        with pytest.raises(DataValidationError, match="missing columns"):
            load_panel(write_csv("entity,time,variable,lower\na,0,y,1.0\n"))

    def test_header_only(self, write_csv):
        with pytest.raises(DataValidationError, match="no rows"):
            load_panel(write_csv(HEADER))

    def test_empty_file(self, write_csv):
        with pytest.raises(DataValidationError, match="cannot parse"):
            load_panel(write_csv(""))


class TestSavePanel:
    def test_round_trip(self, write_csv, tmp_path):
        rng = np.random.default_rng(0)
        grid = np.linspace(0.0, 1.0, 7)
        lower = {v: rng.normal(size=(3, 7)) for v in ("y", "x1")}
        upper = {v: lower[v] + rng.uniform(0.1, 1.0, size=(3, 7)) for v in lower}
        panel = PanelDataset(entities=["c", "a", "b"], grid=grid, variables=["y", "x1"], lower=lower, upper=upper)

        path = save_panel(panel, tmp_path / "out" / "panel.csv")
        again = load_panel(path)
        assert again.entities == ["c", "a", "b"]
        assert again.variables == ["y", "x1"]
        for v in ("y", "x1"):
            np.testing.assert_allclose(again.lower[v], lower[v], rtol=0, atol=1e-12)
            np.testing.assert_allclose(again.upper[v], upper[v], rtol=0, atol=1e-12)
        assert [p.name for p in path.parent.iterdir()] == ["panel.csv"]

    def test_frame_order(self, write_csv):
        frame = load_panel(write_csv(_panel_text())).to_frame()
        assert list(frame.columns) == PANEL_COLUMNS
        assert list(frame["entity"][:6]) == ["b"] * 6
        assert list(frame["variable"][:6]) == ["y"] * 3 + ["x"] * 3
        assert list(frame["time"][:3]) == [0.0, 0.5, 1.0]

    def test_subset(self, write_csv):
        panel = load_panel(write_csv(_panel_text()))
        sub = panel.subset(["a"])
        np.testing.assert_array_equal(sub.lower["y"], panel.lower["y"][[1]])
        with pytest.raises(DataValidationError):
            panel.subset(["zz"])

    def test_json_writer(self, tmp_path):
        path = write_json_atomic({"a": [1, 2]}, tmp_path / "s.json")
        assert path.read_text() == '{\n  "a": [\n    1,\n    2\n  ]\n}\n'


class TestPanelDatasets:
    def test_common_basis_over_time_range(self, write_csv):
        panel = load_panel(write_csv(_panel_text(times=tuple(np.round(np.linspace(2.0, 4.0, 12), 6)))))
        spec = panel_spec(panel, num_basis=5, order=4)
        assert spec.domain == (2.0, 4.0)
        Y, X = panel_to_datasets(panel, ["y", "x"], spec)
        assert len(Y) == 2
        np.testing.assert_allclose(X.lower_values(), panel.lower["x"])

    def test_unknown_variable(self, write_csv):
        panel = load_panel(write_csv(_panel_text(times=tuple(np.linspace(0.0, 1.0, 8)))))
        spec = panel_spec(panel, num_basis=4, order=4)
        with pytest.raises(DataValidationError, match="no variables"):
            panel_to_datasets(panel, ["z"], spec)

    def test_limits_frame(self):
        frame = limits_frame(["a", "b"], np.array([0.0, 1.0]), "y", np.zeros((2, 2)), np.ones((2, 2)))
        assert list(frame.columns) == PANEL_COLUMNS
        assert list(frame["entity"]) == ["a", "a", "b", "b"]
        assert list(frame["time"]) == [0.0, 1.0, 0.0, 1.0]
