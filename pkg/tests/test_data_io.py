from importlib.resources import files

import pytest

from colliderfit.data_io import (Dataset, DataFormatError, JudgmentRecord, dumps_csv, load_csv,
                                 save_csv)
from colliderfit.tasks import TASK_IDS, TaskId

HEADER = "agent_id,prompt_style,content_domain,task_id,response,trial_index\n"


def write(tmp_path, body, header=HEADER):
    path = tmp_path / "judgments.csv"
    path.write_text(header + body)
    return path


def test_single_row(tmp_path):
    ds = load_csv(write(tmp_path, "human,direct,rw17,VI,57,0\n"))
    assert ds.records == [JudgmentRecord("human", "direct", "rw17", TaskId.VI, 57.0, 0)]


def test_out_of_range_response(tmp_path):
    with pytest.raises(DataFormatError) as err:
        load_csv(write(tmp_path, "human,direct,rw17,VI,57,0\nhuman,direct,rw17,VI,101,1\n"))
    assert err.value.line == 3 and err.value.field == "response"


@pytest.mark.parametrize("row, field", [
    ("human,direct,rw17,XII,50,0", "task_id"),
    ("human,direct,rw17,VI,abc,0", "response"),
    ("human,sideways,rw17,VI,50,0", "prompt_style"),
    ("human,direct,rw17,VI,50,-1", "trial_index"),
    ("human,direct,rw17,VI,50", None),
])
def test_malformed_rows_are_located(tmp_path, row, field):
    with pytest.raises(DataFormatError) as err:
        load_csv(write(tmp_path, row + "\n"))
    assert err.value.line == 2
    assert err.value.field == field
    assert ":2" in str(err.value)


def test_bad_header(tmp_path):
    with pytest.raises(DataFormatError, match="header"):
        load_csv(write(tmp_path, "", header="agent,task\n"))


def test_timestamp_column(tmp_path):
    header = HEADER.strip() + ",timestamp\n"
    ds = load_csv(write(tmp_path, "a,cot,rw17,I,10,0,2025-01-02T03:04:05Z\n", header))
    assert ds.records[0].timestamp == "2025-01-02T03:04:05Z"
    with pytest.raises(DataFormatError, match="timestamp"):
        load_csv(write(tmp_path, "a,cot,rw17,I,10,0,yesterday\n", header))


def test_grouping_is_lossless(tmp_path):
    rows = "".join(f"agent,direct,rw17,{t},{(i * 7) % 101},{i}\n"
                   for t in TASK_IDS for i in range(20))
    ds = load_csv(write(tmp_path, rows))
    groups = ds.groups()
    assert list(groups) == [("agent", "direct", "rw17")]
    obs = groups[("agent", "direct", "rw17")]
    assert sum(obs.n_responses(t) for t in TASK_IDS) == len(ds) == 220


def test_normalization_exact(tmp_path):
    ds = load_csv(write(tmp_path, "a,direct,rw17,I,33,0\na,direct,rw17,I,67.5,1\n"))
    obs = ds.groups()[("a", "direct", "rw17")]
    assert obs.responses[TaskId.I] == (33 / 100, 67.5 / 100)


def test_select_by_glob_and_style():
    recs = [JudgmentRecord(a, s, "rw17", TaskId.I, 50, 0)
            for a in ("gpt-4o", "gpt-4o-mini", "human") for s in ("direct", "cot")]
    ds = Dataset(recs)
    assert len(ds.select("gpt-4o*", "all")) == 4
    assert len(ds.select("human", "cot")) == 1
    assert ds.agents == ["gpt-4o", "gpt-4o-mini", "human"]


def test_csv_round_trip(tmp_path):
    recs = [JudgmentRecord("x", "cot", "d", t, 12.5 * (i + 1) % 100, i) for i, t in enumerate(TASK_IDS)]
    path = tmp_path / "out.csv"
    save_csv(Dataset(recs), path)
    assert load_csv(path) == Dataset(recs)
    assert dumps_csv(load_csv(path)) == path.read_text()


def test_bundled_human_like_dataset():
    ds = load_csv(files("colliderfit") / "data" / "human_like_rw17.csv")
    assert len(ds) == 220
    assert ds.groups()[("human_like", "direct", "rw17")].is_complete
