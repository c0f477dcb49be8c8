"""JSON-over-HTTP episode service for interactive operation.

One episode = one in-memory environment guarded by a lock, so requests to
the same episode serialize; distinct episodes are independent.  Actions use
the schema in ``schemas/action.schema.json``.  Every numeric the console is
expected to display verbatim is also shipped as a pre-rendered string
(``rho_display``) so clients never re-format physics values.
"""

from __future__ import annotations

import itertools
import threading
from pathlib import Path

import jsonschema
from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import harness, scoring
from .actions import ActionFormatError, action_from_dict, action_schema
from .chronics import Chronics, load_chronics
from .defaults import default_grid, default_grid_coords, default_scenario
from .env import EnvConfig, Environment, Observation
from .grid import Grid, load_grid


class EpisodeSession:
    def __init__(self, episode_id: str, scenario_name: str, grid: Grid,
                 chronics: Chronics, env_config: EnvConfig):
        self.id = episode_id
        self.scenario = scenario_name
        self.grid = grid
        self.chronics = chronics
        self.env = Environment(grid, chronics, env_config)
        self.env.reset()
        self.refs = scoring.scenario_refs(grid, chronics, env_config)
        self.infos: list = []
        self.lock = threading.Lock()
        self.price_mwh = env_config.price_mwh

    def costs_with(self, extra_info=None) -> float:
        infos = self.infos + ([extra_info] if extra_info is not None else [])
        if not infos:
            return 0.0
        costs = scoring.episode_costs(infos, self.grid, self.price_mwh,
                                      self.env.config.step_hours)
        return costs.total

    def score_so_far(self, extra_info=None) -> float:
        if not self.infos and extra_info is None:
            return 0.0  # nothing has happened yet; anchor at the do-nothing score
        return scoring.normalize_score(self.costs_with(extra_info), self.refs)


def observation_payload(grid: Grid, obs: Observation, horizon: int) -> dict:
    gens = []
    ren_pos = {gid: j for j, gid in enumerate(grid.renewable_ids)}
    for j, g in enumerate(grid.generators):
        entry = {
            "id": g.id,
            "type": g.gen_type,
            "renewable": g.renewable,
            "p_mw": float(obs.gen_p[j]),
            "p_max_mw": g.p_max,
            "potential_mw": (float(obs.renewable_potential[ren_pos[g.id]])
                             if g.renewable else None),
            "curtail_cap": (float(obs.curtail_caps[ren_pos[g.id]])
                            if g.renewable else None),
        }
        gens.append(entry)
    lines = []
    for i, ln in enumerate(grid.lines):
        rho = float(obs.rho[i])
        lines.append({
            "id": ln.id,
            "from": ln.from_substation,
            "to": ln.to_substation,
            "status": bool(obs.line_status[i] > 0.5),
            "rho": rho,
            "rho_display": repr(rho),
            "p_flow_mw": float(obs.line_p_flow[i]),
            "cooldown": int(obs.line_cooldown[i]),
            "thermal_limit_mw": ln.thermal_limit,
        })
    return {
        "step": int(obs.step),
        "n_steps": int(horizon),
        "lines": lines,
        "generators": gens,
        "loads": [{"id": l.id, "p_mw": float(obs.load_p[j])}
                  for j, l in enumerate(grid.loads)],
        "storages": [{
            "id": s.id,
            "energy_mwh": float(obs.storage_energy[j]),
            "e_max_mwh": s.e_max,
            "power_mw": float(obs.storage_power[j]),
            "p_max_mw": s.p_max,
        } for j, s in enumerate(grid.storages)],
        "margins": {"up_mw": float(obs.redispatch_margin[0]),
                    "down_mw": float(obs.redispatch_margin[1])},
        "max_rho": obs.max_rho,
    }


def create_app(grid_path=None, data_dir=None, env_config: EnvConfig | None = None) -> FastAPI:
    grid = load_grid(grid_path) if grid_path else default_grid()
    cfg = env_config or EnvConfig()
    schema = action_schema()
    validator = jsonschema.Draft202012Validator(schema)
    episodes: dict[str, EpisodeSession] = {}
    registry_lock = threading.Lock()
    counter = itertools.count(1)

    app = FastAPI(title="gridmdp service")
    # the dispatcher console is served as static files from another port
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def resolve_scenario(name: str) -> Chronics:
        if name == "default":
            return default_scenario(days=7, seed=42)
        path = Path(name)
        if not path.is_dir() and data_dir:
            candidate = Path(data_dir) / name
            if candidate.is_dir():
                path = candidate
        return load_chronics(path)

    def get_session(episode_id: str) -> EpisodeSession:
        with registry_lock:
            session = episodes.get(episode_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown episode {episode_id!r}")
        return session

    def parse_action(doc: dict):
        errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
        if errors:
            raise HTTPException(status_code=422, detail=[
                {"path": e.json_path, "message": e.message} for e in errors[:8]])
        try:
            return action_from_dict(doc)
        except ActionFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    def state_payload(session: EpisodeSession) -> dict:
        obs = session.env.current_observation()
        payload = observation_payload(session.grid, obs, session.env.horizon)
        payload["episode_id"] = session.id
        payload["scenario"] = session.scenario
        payload["done"] = session.env.done
        payload["score_so_far"] = session.score_so_far()
        payload["cost_so_far"] = session.costs_with()
        payload["last_info"] = session.infos[-1] if session.infos else None
        return payload

    @app.get("/grid")
    def grid_info():
        coords = default_grid_coords() if grid_path is None else {}
        return {
            "substations": [s.id for s in grid.substations],
            "lines": [{"id": l.id, "from": l.from_substation, "to": l.to_substation,
                       "thermal_limit_mw": l.thermal_limit} for l in grid.lines],
            "coords": coords,
        }

    @app.get("/schemas/action")
    def get_action_schema():
        return schema

    @app.post("/episodes", status_code=201)
    def create_episode(body: dict = Body(...)):
        name = body.get("scenario", "default")
        try:
            chronics = resolve_scenario(str(name))
        except Exception as exc:
            raise HTTPException(status_code=422, detail=f"cannot load scenario: {exc}")
        with registry_lock:
            episode_id = f"ep{next(counter)}"
            session = EpisodeSession(episode_id, str(name), grid, chronics, cfg)
            episodes[episode_id] = session
        return {"episode_id": episode_id, "observation": state_payload(session)}

    @app.get("/episodes/{episode_id}")
    def get_state(episode_id: str):
        session = get_session(episode_id)
        with session.lock:
            return state_payload(session)

    @app.post("/episodes/{episode_id}/step")
    def step_episode(episode_id: str, body: dict = Body(...)):
        session = get_session(episode_id)
        action = parse_action(body.get("action", body))
        with session.lock:
            if session.env.done:
                raise HTTPException(status_code=409, detail="episode is finished")
            result = session.env.step(action)
            session.infos.append(result.info)
            payload = state_payload(session)
        return {"observation": payload, "reward": result.reward,
                "done": result.done, "info": result.info}

    @app.post("/episodes/{episode_id}/simulate")
    def simulate_episode(episode_id: str, body: dict = Body(...)):
        session = get_session(episode_id)
        action = parse_action(body.get("action", body))
        with session.lock:
            if session.env.done:
                raise HTTPException(status_code=409, detail="episode is finished")
            result = session.env.simulate(action)
            payload = observation_payload(session.grid, result.observation,
                                          session.env.horizon)
            payload["episode_id"] = session.id
            payload["scenario"] = session.scenario
            payload["done"] = result.done
            payload["score_so_far"] = session.score_so_far(result.info)
            payload["cost_so_far"] = session.costs_with(result.info)
            payload["last_info"] = result.info
        return {"observation": payload, "reward": result.reward,
                "done": result.done, "info": result.info}

    @app.post("/episodes/{episode_id}/agent-suggest")
    def agent_suggest(episode_id: str, body: dict = Body(...)):
        session = get_session(episode_id)
        spec = body.get("agent", "expert")
        try:
            agent = harness.build_agent(str(spec), session.grid)
        except (ValueError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with session.lock:
            if session.env.done:
                raise HTTPException(status_code=409, detail="episode is finished")
            obs = session.env.current_observation()
            action = agent.act(obs, session.env)
        from .actions import action_to_dict
        return {"agent": spec, "action": action_to_dict(action)}

    @app.delete("/episodes/{episode_id}", status_code=204)
    def delete_episode(episode_id: str):
        with registry_lock:
            if episode_id not in episodes:
                raise HTTPException(status_code=404,
                                    detail=f"unknown episode {episode_id!r}")
            del episodes[episode_id]

    return app
