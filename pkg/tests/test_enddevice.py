from lorasim.enddevice import IDLE
from lorasim.phyreg import airtime_ns, off_time_ns
from lorasim.simcore import EventKind, seconds
from scene import inject_uplink, make_scene

F1, F2, RX2 = 868_100_000, 868_300_000, 869_525_000
FAR_AWAY = (20_000.0, 0.0)  # below gateway sensitivity even at SF12


def start_packet(sim, dev_id, at=0):
    dev = sim.devices[dev_id]
    sim.engine.schedule(at, EventKind.PACKET_GENERATION, dev.generate_packet)
    return dev


def windowed(sim):
    sim.window_log = []
    return sim


def test_acked_exchange_timing():
    sim = windowed(make_scene({0: (400.0, 0.0)}, sf=9, confirmed=True))
    dev = start_packet(sim, 0)
    sim.engine.run_until(seconds(60))
    (ul,) = [t for t in sim.transmissions if t.direction == "UL"]
    assert ul.start == 0 and ul.end == airtime_ns(9, sim.ul_params)
    (w,) = sim.window_log
    assert w[2] == 1 and w[3] == ul.end + seconds(1)
    pkt = dev.packets[0]
    assert pkt.acked and pkt.attempts == 1 and dev.state == IDLE
    assert (pkt.rx1_opened, pkt.rx2_opened) == (1, 0)


def test_unconfirmed_opens_both_windows_once():
    sim = windowed(make_scene({0: (400.0, 0.0)}, sf=7))
    dev = start_packet(sim, 0)
    sim.engine.run_until(seconds(60))
    ul_end = sim.transmissions[0].end
    assert [(w[2], w[3]) for w in sim.window_log] == [(1, ul_end + seconds(1)), (2, ul_end + seconds(2))]
    assert sim.window_log[1][5:7] == (RX2, 12)
    assert dev.packets[0].attempts == 1 and not dev.packets[0].acked


def test_unreachable_device_uses_every_attempt():
    sim = windowed(make_scene({0: FAR_AWAY}, sf=12, confirmed=True))
    dev = start_packet(sim, 0)
    sim.engine.run_until(seconds(5000))
    ul = [t for t in sim.transmissions if t.direction == "UL"]
    assert [t.attempt for t in ul] == list(range(1, 9))
    assert all(t.outcome == "U" for t in ul)
    assert dev.packets[0].rx1_opened == 8 and dev.packets[0].rx2_opened == 8
    # SF12: the duty-cycle silence (99 airtimes) dominates the 1-3 s backoff
    a = airtime_ns(12, sim.ul_params)
    for prev, nxt in zip(ul, ul[1:]):
        assert nxt.start == prev.end + off_time_ns(a, 0.01)


def test_backoff_then_duty_cycle():
    # a 9-byte frame at SF7 puts the duty-cycle release inside the backoff range
    sim = windowed(make_scene({0: FAR_AWAY}, sf=7, confirmed=True,
                              overrides={"phy.payload_bytes": 9}))
    start_packet(sim, 0)
    sim.engine.run_until(seconds(5000))
    ul = [t for t in sim.transmissions if t.direction == "UL"]
    closes = {w[1]: w[4] for w in sim.window_log if w[2] == 2}
    by_dc = 0
    dc_free = [prev.end + off_time_ns(prev.end - prev.start, 0.01) for prev in ul]
    for k, (prev, nxt) in enumerate(zip(ul, ul[1:])):
        gap = nxt.start - closes[prev.id]
        # the later of backoff expiry and duty-cycle release
        assert gap >= seconds(1) and nxt.start >= dc_free[k]
        assert gap <= seconds(3) or nxt.start == dc_free[k]
        by_dc += nxt.start == dc_free[k]
    assert 0 < by_dc < len(ul) - 1


def test_single_attempt_setting():
    sim = make_scene({0: FAR_AWAY}, sf=12, confirmed=True, overrides={"mac.max_attempts": 1})
    dev = start_packet(sim, 0)
    sim.engine.run_until(seconds(5000))
    assert len(sim.transmissions) == 1 and dev.state == IDLE


def test_packet_generated_while_busy_is_dropped():
    sim = make_scene({0: FAR_AWAY}, sf=12, confirmed=True)
    dev = sim.devices[0]
    dev.period = seconds(30)
    start_packet(sim, 0)
    sim.engine.run_until(seconds(100))
    assert len(dev.packets) == 4
    assert [p.dropped for p in dev.packets] == [False, True, True, True]
    assert dev.superseded == 3


def test_no_rx2_after_rx1_ack_in_a_busy_run(small_cfg):
    from lorasim.simulation import Simulation

    sim = Simulation(small_cfg, seed=5, record_windows=True).run()
    acked_in_rx1 = {}
    for dev, ul, which, *_rest, locked in sim.window_log:
        if which == 1:
            acked_in_rx1[ul] = locked
    txs = {t.id: t for t in sim.transmissions}
    for dev, ul, which, *_rest, locked in sim.window_log:
        if which == 2:
            prior = txs.get(acked_in_rx1.get(ul, -1))
            assert not (prior is not None and prior.direction == "DL" and prior.target == dev
                        and prior.outcome == "S")


def mislock_scene(mislock):
    # no ACK is coming for an unconfirmed uplink, so only the neighbour can be heard
    sim = windowed(make_scene({0: (400.0, 0.0), 1: (450.0, 0.0)}, sf=7,
                              overrides={"mac.mislock": mislock}))
    start_packet(sim, 0)
    a = airtime_ns(7, sim.ul_params)
    sim.engine.run_until(a)  # the first attempt has just ended
    ul = sim.transmissions[0]
    # a neighbour's uplink starts inside the RX1 window on the same carrier and SF
    neighbour = inject_uplink(sim, 1, ul.end + seconds(1) + 1000, ul.frequency)
    sim.engine.run_until(seconds(10))
    return sim, ul, neighbour


def test_mislock_on_locks_on_uplink_preamble():
    sim, ul, neighbour = mislock_scene(True)
    rx1 = [w for w in sim.window_log if w[1] == ul.id and w[2] == 1][0]
    assert rx1[7] == neighbour.id


def test_mislock_off_ignores_uplinks():
    sim, ul, neighbour = mislock_scene(False)
    rx1 = [w for w in sim.window_log if w[1] == ul.id and w[2] == 1][0]
    assert rx1[7] == -1
