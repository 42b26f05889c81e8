"""
Agent matching.

Assigns each provider one trusted encryption agent, balancing load across
the roster, and picks computation agents trusted by every included provider.
"""

import logging
from typing import Mapping

from pydantic import BaseModel

from app.agents.models import AgentRoster, PreferenceFile
from app.errors import NoComputationAgentsTrustedError

logger = logging.getLogger(__name__)


class MatchResult(BaseModel):
    """Provider to encryption-agent assignment plus the agreed computation agents."""
    assignments: dict[str, str]
    excluded: list[str]
    computation_agents: list[str]

    def tasks_for(self, agent: str) -> list[str]:
        return [provider for provider, assigned in self.assignments.items() if assigned == agent]


def match_agents(
    preferences: Mapping[str, PreferenceFile],
    roster: AgentRoster,
    n_computation: int | None = None,
) -> MatchResult:
    """
    Match providers to delegates.

    Args:
        preferences: Preference file per provider id, in provider order
        roster: Available agents
        n_computation: How many computation agents the run needs
            (default: every agent in the roster)

    Returns:
        MatchResult; providers without a usable delegate are excluded, not errors

    Raises:
        NoComputationAgentsTrustedError: fewer than n_computation agents are
            trusted by all included providers
    """
    if not roster.encryption or not roster.computation:
        raise ValueError("roster needs at least one encryption and one computation agent")
    n_computation = len(roster.computation) if n_computation is None else n_computation

    encryption = roster.encryption_names()
    computation = roster.computation_names()
    load = {name: 0 for name in encryption}
    assignments: dict[str, str] = {}
    excluded: list[str] = []

    for provider, preference in preferences.items():
        usable = [name for name in encryption if name in preference.trusted_encryption_agents]
        trusted_computation = [name for name in computation if name in preference.trusted_computation_agents]
        if not usable or not trusted_computation:
            logger.warning(f"Excluding provider {provider}: no trusted agent available in roster")
            excluded.append(provider)
            continue
        # least loaded first, roster order breaks ties
        chosen = min(usable, key=lambda name: (load[name], encryption.index(name)))
        load[chosen] += 1
        assignments[provider] = chosen

    common = list(computation)
    for provider in assignments:
        trusted = preferences[provider].trusted_computation_agents
        common = [name for name in common if name in trusted]
    if len(common) < n_computation:
        raise NoComputationAgentsTrustedError(
            f"{len(common)} computation agents trusted by all {len(assignments)} included providers, "
            f"need {n_computation}"
        )

    selected = common[:n_computation]
    logger.info(
        f"Matched {len(assignments)} providers ({len(excluded)} excluded); "
        f"encryption load {load}; computation agents {selected}"
    )
    return MatchResult(assignments=assignments, excluded=excluded, computation_agents=selected)
