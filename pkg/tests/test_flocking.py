import itertools

import numpy as np
import pytest

from thclust import Actor, SimConfig, ValidationError, initial_state, run, run_detailed, step


def still_config(**overrides):
    """All steering and interaction machinery off unless asked for."""
    base = dict(
        actor_count=2,
        clump_weight=0.0,
        avoid_weight=0.0,
        school_weight=0.0,
        wall_force=0.0,
        interact_prob=0.0,
        total_ticks=1,
        snapshot_interval=1,
    )
    base.update(overrides)
    return SimConfig(**base)


def actor(ident, kind, pos, vel):
    return Actor(ident, kind, np.array(pos, dtype=float), np.array(vel, dtype=float))


# ---------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(actor_count=0)
    with pytest.raises(ValidationError):
        SimConfig(dt=0.0)
    with pytest.raises(ValidationError):
        SimConfig(avoid_radius=20.0, clump_radius=10.0)
    with pytest.raises(ValidationError):
        SimConfig(spawn_prob=1.5)
    with pytest.raises(ValidationError):
        SimConfig(snapshot_interval=0)
    with pytest.raises(ValidationError):
        SimConfig(max_speed=0.0)


def test_config_round_trip_and_unknown_key():
    cfg = SimConfig(actor_count=7, seed=3)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValidationError):
        SimConfig.from_dict({"actor_count": 7, "warp_drive": True})


# ---------------------------------------------------------------- single steps


def test_force_free_step_is_pure_drift():
    cfg = still_config(dt=0.1)
    state = [actor("a00000", 0, (50.0, 50.0), (1.0, 2.0))]
    out = step(state, cfg, np.random.default_rng(0))
    assert np.array_equal(out[0].position, [50.1, 50.2])
    assert np.array_equal(out[0].velocity, [1.0, 2.0])


def test_speed_is_clamped():
    cfg = still_config(max_speed=4.0)
    state = [actor("a00000", 0, (50.0, 50.0), (30.0, 40.0))]
    out = step(state, cfg, np.random.default_rng(0))
    speed = float(np.hypot(*out[0].velocity))
    assert abs(speed - 4.0) < 1e-9


def test_clump_pulls_same_kind_together():
    cfg = still_config(clump_weight=0.5, clump_radius=30.0)
    state = [
        actor("a00000", 1, (40.0, 50.0), (0.0, 0.0)),
        actor("a00001", 1, (60.0, 50.0), (0.0, 0.0)),
    ]
    out = step(state, cfg, np.random.default_rng(0))
    gap = np.linalg.norm(out[0].position - out[1].position)
    assert gap < 20.0


def test_clump_ignores_other_kinds():
    cfg = still_config(clump_weight=0.5, clump_radius=30.0)
    state = [
        actor("a00000", 1, (40.0, 50.0), (0.0, 0.0)),
        actor("a00001", 2, (60.0, 50.0), (0.0, 0.0)),
    ]
    out = step(state, cfg, np.random.default_rng(0))
    assert np.array_equal(out[0].position, [40.0, 50.0])
    assert np.array_equal(out[1].position, [60.0, 50.0])


def test_avoid_pushes_close_actors_apart():
    cfg = still_config(avoid_weight=1.5, avoid_radius=3.0, clump_radius=15.0)
    state = [
        actor("a00000", 1, (49.5, 50.0), (0.0, 0.0)),
        actor("a00001", 2, (50.5, 50.0), (0.0, 0.0)),
    ]
    out = step(state, cfg, np.random.default_rng(0))
    gap = np.linalg.norm(out[0].position - out[1].position)
    assert gap > 1.0


def test_school_aligns_with_kind_mean_velocity():
    cfg = still_config(school_weight=0.5)
    state = [
        actor("a00000", 0, (30.0, 50.0), (0.0, 0.0)),
        actor("a00001", 0, (70.0, 50.0), (2.0, 0.0)),
    ]
    out = step(state, cfg, np.random.default_rng(0))
    assert out[0].velocity[0] > 0.0


def test_boundary_reflection():
    cfg = still_config(max_speed=4.0, dt=0.1)
    state = [actor("a00000", 0, (99.9, 50.0), (4.0, 0.0))]
    out = step(state, cfg, np.random.default_rng(0))
    assert abs(out[0].position[0] - 99.7) < 1e-9
    assert out[0].velocity[0] == -4.0


def test_wall_force_decelerates_near_edge():
    cfg = still_config(wall_force=4.0, dt=0.1)
    state = [actor("a00000", 0, (99.0, 50.0), (0.0, 0.0))]
    out = step(state, cfg, np.random.default_rng(0))
    assert out[0].velocity[0] < 0.0  # pushed back toward the interior


# ---------------------------------------------------------------- interactions


def test_no_interactions_means_constant_population():
    cfg = still_config(
        actor_count=20, interact_prob=0.0, total_ticks=40, snapshot_interval=10
    )
    samp, _ = run_detailed(cfg)
    assert [len(level) for level in samp.levels] == [20] * 5


def test_spawn_count_matches_same_kind_pairs():
    # radius covers the arena and every draw fires, so each same-kind pair
    # spawns exactly one newcomer in the single tick
    cfg = SimConfig(
        actor_count=40,
        total_ticks=1,
        snapshot_interval=1,
        interact_prob=1.0,
        interact_radius=500.0,
        spawn_prob=1.0,
        delete_prob=0.0,
        seed=2,
    )
    samp, kind_maps = run_detailed(cfg)
    counts = np.bincount(list(kind_maps[0].values()), minlength=4)
    want_spawns = sum(c * (c - 1) // 2 for c in counts)
    assert len(samp.levels[1]) == len(samp.levels[0]) + want_spawns
    assert any(ident.endswith("a00040") for ident in samp.levels[1])


def test_delete_removes_lex_later_actor():
    cfg = SimConfig(
        actor_count=40,
        total_ticks=1,
        snapshot_interval=1,
        interact_prob=1.0,
        interact_radius=500.0,
        spawn_prob=0.0,
        delete_prob=1.0,
        seed=2,
    )
    samp, _ = run_detailed(cfg)
    assert len(samp.levels[1]) < len(samp.levels[0])
    survivors = {ident.split("_", 1)[1] for ident in samp.levels[1]}
    originals = {ident.split("_", 1)[1] for ident in samp.levels[0]}
    assert survivors <= originals  # nothing spawned
    assert "a00000" in survivors  # the lex-smallest ident is never the victim


# ---------------------------------------------------------------- runs


def test_run_is_deterministic_per_seed():
    cfg = SimConfig(actor_count=12, total_ticks=60, snapshot_interval=20, seed=9)
    first = run(cfg)
    second = run(cfg)
    assert first.to_dict() == second.to_dict()
    other = run(SimConfig(actor_count=12, total_ticks=60, snapshot_interval=20, seed=10))
    assert other.to_dict() != first.to_dict()


def test_interaction_stream_does_not_touch_initial_placement():
    quiet = SimConfig(actor_count=15, total_ticks=20, snapshot_interval=20, seed=4, interact_prob=0.0)
    busy = SimConfig(actor_count=15, total_ticks=20, snapshot_interval=20, seed=4, interact_prob=0.9)
    a, _ = run_detailed(quiet)
    b, _ = run_detailed(busy)
    ids_a = [i.split("_", 1)[1] for i in a.levels[0]]
    ids_b = [i.split("_", 1)[1] for i in b.levels[0]]
    assert ids_a == ids_b
    sub_a = a.ambient.restrict(a.levels[0])
    sub_b = b.ambient.restrict(b.levels[0])
    assert np.array_equal(sub_a.dist, sub_b.dist)


def test_initial_state_is_seed_determined():
    cfg = SimConfig(actor_count=10, seed=6)
    first = initial_state(cfg, np.random.default_rng(42))
    second = initial_state(cfg, np.random.default_rng(42))
    assert [a.ident for a in first] == [a.ident for a in second]
    assert all(np.array_equal(x.position, y.position) for x, y in zip(first, second))
    assert all(np.array_equal(x.velocity, y.velocity) for x, y in zip(first, second))
    assert {a.kind for a in first} <= set(range(4))


def test_snapshot_schedule_and_level_ids():
    cfg = SimConfig(actor_count=5, total_ticks=100, snapshot_interval=50, seed=1)
    samp, kind_maps = run_detailed(cfg)
    assert samp.t == 3
    assert len(kind_maps) == 3
    for lvl, level in enumerate(samp.levels):
        for ident in level:
            assert ident.startswith(f"t{lvl:03d}_a")
        assert set(level) == set(kind_maps[lvl])


def test_zero_tick_run_has_single_level():
    cfg = SimConfig(actor_count=5, total_ticks=0, seed=1)
    samp, _ = run_detailed(cfg)
    assert samp.t == 1
    assert len(samp.levels[0]) == 5


def test_positions_stay_inside_arena():
    cfg = SimConfig(actor_count=25, total_ticks=120, snapshot_interval=30, seed=8, max_speed=8.0)
    samp, _ = run_detailed(cfg)
    assert samp.ambient.pseudo
    coords = samp.ambient.coords
    assert coords.min() >= 0.0
    assert coords.max() <= cfg.arena_side


def test_on_tick_callback_sees_every_tick():
    seen = []
    cfg = SimConfig(actor_count=6, total_ticks=7, snapshot_interval=7, seed=0)
    run_detailed(cfg, on_tick=lambda tick, population: seen.append((tick, population)))
    assert [t for t, _ in seen] == list(range(1, 8))
    assert all(p >= 1 for _, p in seen)
