import io
import xml.etree.ElementTree as ET

import numpy as np

from memlearn import experiments as ex, output, toy
from memlearn.network import NetworkDims
from memlearn.trainer import RunRecord, StepRecord, TrainerConfig


def _csv(result):
    buf = io.StringIO()
    output.emit_csv(result, buf)
    return buf.getvalue()


def _svg(result=None, table=None):
    buf = io.StringIO()
    output.emit_svg(result, buf, table=table)
    return buf.getvalue()


def small_sweep():
    spec = ex.SweepSpec(grid=[(2, 2, 5), (2, 2, 20)], realizations=3, seed=1, max_steps=50)
    return ex.run_success_sweep(spec)


def test_sweep_schema():
    text = _csv(small_sweep())
    lines = text.splitlines()
    assert lines[0] == "n_in,n_out,n_bulk,step,success,sem"
    assert len(lines) == 1 + 2 * 50
    assert lines[1].startswith("2,2,5,1,")


def test_device_schema_and_precision():
    demo = ex.run_device_demo(ex.hysteresis_demo_params(), ex.triangle(-0.5, 5))
    lines = _csv(demo).splitlines()
    assert lines[0] == "t,v,i,r"
    assert len(lines) == 1 + len(demo.v)
    for cell in lines[3].split(","):
        digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 9


def test_relearn_schema_and_histograms():
    res = ex.run_relearn_shuffle(NetworkDims(2, 10, 2), TrainerConfig(), cycles=0, seed=2)
    lines = _csv(res).splitlines()
    assert lines[0] == "maps_learned,mean_r,cv"
    assert len(lines) == 1 + 5
    h = res.histograms[4]
    kind, header, rows = output.histogram_rows(h["raw_counts"], h["raw_edges"])
    assert header == ["bin_low", "bin_high", "count"]
    assert len(rows) == len(h["raw_counts"])


def test_other_schemas():
    rng = np.random.default_rng(0)
    trace = toy.toy_train(toy.build_toy(3, 5, 3, rng), [ex.TOY_MAPS_6["a"]], 0, rng)
    assert _csv(trace) == "step,map,error\n"
    rec = RunRecord([StepRecord(1, 0, 3, True, 1)], None)
    assert _csv(rec).splitlines() == ["step,input,corrections,resolved,error", "1,0,3,1,1"]


def test_header_present_for_empty_results():
    empty = ex.SweepResult(ex.SweepSpec(grid=[]), [])
    assert _csv(empty) == "n_in,n_out,n_bulk,step,success,sem\n"


def test_csv_deterministic():
    assert _csv(small_sweep()) == _csv(small_sweep())


def test_svg_one_polyline_per_bulk_size():
    root = ET.fromstring(_svg(small_sweep()))
    polylines = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert len(polylines) == 2


def test_svg_device_loop():
    demo = ex.run_device_demo(ex.hysteresis_demo_params(), ex.hysteresis_waveform())
    root = ET.fromstring(_svg(demo))
    (line,) = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert len(line.get("points").split()) == len(demo.v)


def test_svg_empty_result_has_axes_only():
    empty = ex.SweepResult(ex.SweepSpec(grid=[]), [])
    root = ET.fromstring(_svg(empty))
    ns = "{http://www.w3.org/2000/svg}"
    assert root.findall(f"{ns}polyline") == []
    assert len(root.findall(f"{ns}line")) == 2


def test_svg_histogram():
    counts, edges = np.array([1.0, 3.0, 2.0]), np.array([0.0, 5.0, 10.0, 15.0])
    root = ET.fromstring(_svg(table=output.histogram_rows(counts, edges)))
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 1


def test_svg_regenerated_from_csv_is_identical():
    res = small_sweep()
    header, rows = output.read_csv(_csv(res))
    assert _svg(table=("sweep", header, rows)) == _svg(res)
