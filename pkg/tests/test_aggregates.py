import collections
import datetime

import pytest

from mrlab.aggregates import (
    CallRecord,
    avg_duration_by_date,
    calls_per_date_number,
    read_call_csv,
    word_count,
)
from mrlab.engine import ClusterConfig
from mrlab.errors import RowParseError

D1 = datetime.date(2024, 1, 1)
D2 = datetime.date(2024, 1, 2)


def call(date, duration, caller="0600000000"):
    return CallRecord(date, caller, "0700000000", float(duration))


# ------------------------------------------------------------ avg duration


def test_avg_duration_hand_example():
    records = [call(D1, 30), call(D1, 60), call(D2, 10)]
    out, _ = avg_duration_by_date(records)
    assert out == [("2024-01-01", (45.0, 2)), ("2024-01-02", (10.0, 1))]


def test_avg_duration_single_record():
    out, _ = avg_duration_by_date([call(D1, 7)])
    assert out == [("2024-01-01", (7.0, 1))]


def test_avg_duration_empty_input():
    out, stats = avg_duration_by_date([])
    assert out == []
    assert stats.records_read == 0


def test_avg_duration_matches_oracle_exactly(call_corpus):
    # integer durations: both routes sum exactly, so == is legitimate
    sums = collections.defaultdict(float)
    counts = collections.Counter()
    for r in call_corpus:
        sums[r.date.isoformat()] += r.duration
        counts[r.date.isoformat()] += 1
    expected = {d: (sums[d] / counts[d], counts[d]) for d in sums}
    for splits in (1, 2, 8):
        out, _ = avg_duration_by_date(call_corpus, ClusterConfig(num_splits=splits))
        assert dict(out) == expected
        assert [d for d, _ in out] == sorted(expected)


def test_avg_duration_fractional_durations_close_across_splits():
    records = [call(D1, 0.1 * i) for i in range(1, 200)]
    baseline, _ = avg_duration_by_date(records, ClusterConfig(num_splits=1))
    for splits in (2, 8):
        out, _ = avg_duration_by_date(records, ClusterConfig(num_splits=splits))
        assert out[0][1][0] == pytest.approx(baseline[0][1][0], rel=1e-12)


# ------------------------------------------------------------- call counts


def test_calls_per_date_number_hand_example():
    records = [call(D1, 5, "X"), call(D1, 6, "X"), call(D1, 7, "Y")]
    out, _ = calls_per_date_number(records)
    assert out == [(("2024-01-01", "X"), 2), (("2024-01-01", "Y"), 1)]


def test_calls_per_date_number_empty():
    out, _ = calls_per_date_number([])
    assert out == []


def test_calls_per_date_number_matches_oracle(call_corpus):
    oracle = collections.Counter((r.date.isoformat(), r.caller) for r in call_corpus)
    for splits in (1, 2, 8):
        out, _ = calls_per_date_number(call_corpus, ClusterConfig(num_splits=splits))
        assert dict(out) == dict(oracle)


# -------------------------------------------------------------- word count


def test_word_count_hand_example():
    out, _ = word_count(["a b a"])
    assert out == [("a", 2), ("b", 1)]


def test_word_count_empty_document():
    out, _ = word_count([""])
    assert out == []
    out, _ = word_count([])
    assert out == []


def test_word_count_matches_counter_oracle():
    docs = [
        "the quick brown fox",
        "jumps over the lazy dog",
        "the dog   barks",  # repeated whitespace folds away
        "fox\tdog fox",
    ]
    oracle = collections.Counter(" ".join(docs).split())
    for splits in (1, 2, 8):
        out, _ = word_count(docs, ClusterConfig(num_splits=splits))
        assert dict(out) == dict(oracle)
        assert [t for t, _ in out] == sorted(oracle)


# -------------------------------------------------------------- CSV parsing


def test_read_call_csv_roundtrip(tmp_path):
    p = tmp_path / "calls.csv"
    p.write_text(
        "date,caller,callee,duration\n"
        "2024-01-01,0601,0701,60\n"
        "2024-01-02,0602,0702,2.5\n"
    )
    records = read_call_csv(p)
    assert records == [
        CallRecord(D1, "0601", "0701", 60.0),
        CallRecord(D2, "0602", "0702", 2.5),
    ]


def test_read_call_csv_rejects_wrong_header(tmp_path):
    p = tmp_path / "calls.csv"
    p.write_text("when,who,whom,time\n2024-01-01,a,b,1\n")
    with pytest.raises(RowParseError) as err:
        read_call_csv(p)
    assert err.value.row == 1


@pytest.mark.parametrize(
    "row,fragment",
    [
        ("01/02/2024,a,b,10", "ISO date"),
        ("2024-01-01,a,b,ten", "duration"),
        ("2024-01-01,a,b,-3", "negative"),
        ("2024-01-01,a,b", "4 fields"),
    ],
)
def test_read_call_csv_bad_rows_carry_line_numbers(tmp_path, row, fragment):
    p = tmp_path / "calls.csv"
    p.write_text(f"date,caller,callee,duration\n2024-01-01,a,b,1\n{row}\n")
    with pytest.raises(RowParseError) as err:
        read_call_csv(p)
    assert err.value.row == 3
    assert fragment in str(err.value)


def test_duration_nan_rejected(tmp_path):
    p = tmp_path / "calls.csv"
    p.write_text("date,caller,callee,duration\n2024-01-01,a,b,nan\n")
    with pytest.raises(RowParseError):
        read_call_csv(p)
