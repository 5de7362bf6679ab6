import pytest
from hypothesis import given, strategies as st

from helpers import grid, path
from pmk.congest import (BfsProgram, Program, SimNetwork, TreeBroadcast, WordCodec,
                         run_program)
from pmk.errors import InvalidParams, MessageOverflow
from pmk.planar import bfs_tree, generate


@given(st.integers(1, 5000), st.lists(st.integers(-10**9, 10**9), max_size=12))
def test_codec_roundtrip(n, values):
    c = WordCodec(n)
    enc = c.encode(values)
    assert set(enc) <= {"0", "1"}
    assert len(enc) % (c.word + 1) == 0
    assert c.decode(enc) == tuple(values)


def test_word_size_tracks_log_n():
    assert WordCodec(255).word == 8
    assert WordCodec(256).word == 9
    # zigzag doubles, so ids below n/2 take one unit
    assert WordCodec(1000).bits((499,)) == 11
    assert WordCodec(1000).bits((999,)) == 22


def test_bfs_on_p4():
    net = SimNetwork(path(4))
    out, led = run_program(net, BfsProgram(0))
    assert out == [0, 1, 2, 3]
    assert abs(led.executed - 4) <= 1


def test_empty_program_takes_no_rounds():
    net = SimNetwork(grid(3))
    out, led = run_program(net, Program())
    assert led.executed == 0 and out == [None] * 9


@pytest.mark.parametrize("h,k", [(5, 1), (5, 10), (12, 30), (1, 40)])
def test_pipelined_broadcast(h, k):
    g = path(h + 1)
    net = SimNetwork(g)
    children = [[v + 1] if v < h else [] for v in range(h + 1)]
    # each record fills one frame, so k records are k * beta bits
    units = net.beta // (net.codec.word + 1)
    recs = [(i % 2,) * units for i in range(k)]
    assert all(net.codec.bits(r) <= net.beta for r in recs)
    out, led = run_program(net, TreeBroadcast(0, children, recs))
    assert out[h] == recs
    assert led.executed <= h + k + 1


def test_frames_never_exceed_beta():
    g = generate("random-triangulation", {"n": 60}, seed=3)
    net = SimNetwork(g, keep_transcript=True)
    t = bfs_tree(g, 0)
    recs = [tuple(range(i, i + 9)) for i in range(5)]
    run_program(net, TreeBroadcast(0, t.children(), recs))
    assert net.transcript
    assert all(int(line.split("|")[3]) <= net.beta for line in net.transcript)


def test_atomic_overflow():
    class Big(Program):
        def init(self, v, rng):
            return v == 0

        def step(self, v, st, inbox, io):
            io.send(1, tuple(range(50)), atomic=True)

        def halted(self, v, st):
            return not st

    with pytest.raises(MessageOverflow):
        run_program(SimNetwork(path(3)), Big())


def test_non_neighbour_send():
    class Far(Program):
        def init(self, v, rng):
            return v == 0

        def step(self, v, st, inbox, io):
            io.send(2, (1,))

        def halted(self, v, st):
            return not st

    with pytest.raises(InvalidParams):
        run_program(SimNetwork(path(3)), Far())


def test_transcript_hash_is_deterministic():
    g = generate("random-triangulation", {"n": 50}, seed=9)
    hashes = set()
    for _ in range(2):
        net = SimNetwork(g)
        run_program(net, BfsProgram(7), seed=3)
        hashes.add(net.transcript_hash)
    assert len(hashes) == 1
    other = SimNetwork(g)
    run_program(other, BfsProgram(8), seed=3)
    assert other.transcript_hash not in hashes


def test_ledger_charges_and_totals():
    net = SimNetwork(path(5))
    run_program(net, BfsProgram(0))
    net.ledger.charge("black-box", 17, "some cited routine")
    d = net.ledger.to_dict()
    assert d["charged"] == 17 and d["total"] == d["executed"] + 17
    assert net.ledger.by_prefix()["black-box"] == 17
