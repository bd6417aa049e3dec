""" Protocol parameters of a CTCP connection.

All constants of the protocol live here together with their defaults.
The source algorithms leave most of them open; the defaults follow the
conventions of the TCP family where nothing else is known.
"""
import logging
import os
from typing import Any, Dict, Optional

import dotenv
from pydantic import BaseModel, Field, ValidationError, model_validator

from ctcp.exceptions import InvalidParametersException

logger = logging.getLogger("ctcp.parameters")

# estimator
DEFAULT_ALPHA_RTT = 0.125
DEFAULT_MU = 0.1
DEFAULT_NU = 0.01
DEFAULT_GAMMA = 3.0
DEFAULT_INITIAL_RTT = 0.5
DEFAULT_INITIAL_P = 0.0
DEFAULT_INITIAL_P_LONG = 0.0
DEFAULT_INITIAL_P_STDLONG = 0.01

# congestion control
DEFAULT_ALPHA_VEGAS = 0.05
DEFAULT_BETA_VEGAS = 0.25
DEFAULT_INITIAL_TOKENS = 2.0
DEFAULT_TOKEN_FLOOR = 1.0
DEFAULT_INITIAL_SS_THRESHOLD = 64.0

# blocks
DEFAULT_BLKSIZE = 32
DEFAULT_NUMBLKS = 8
DEFAULT_PAYLOAD_SIZE = 1024

# scheduling
DEFAULT_ONFLY_FACTOR = 1.5

# Locations searched for an env file if the caller does not name one.
ENV_LOCATIONS = (".ctcp", "ctcp.env")

ENV_PREFIX = "CTCP_"


class CtcpParameters(BaseModel):
    """Parameter set shared by sender and receiver.

    Attributes:
    ----------
    - alpha_rtt (float): weight of a new sample in the RTT average
    - mu (float): weight of the short-term loss average
    - nu (float): weight of the long-term loss average, must be below mu
    - gamma (float): RTO multiplier, RTO = gamma * RTT
    - alpha_vegas (float): lower delay threshold of congestion avoidance
    - beta_vegas (float): upper delay threshold of congestion avoidance
    - initial_tokens (float): tokens after start and after a timeout
    - token_floor (float): lower clamp of the token count
    - initial_ss_threshold (float): slow-start threshold before the
        first timeout
    - initial_rtt (float): RTT estimate in seconds before the first sample
    - initial_p, initial_p_long, initial_p_stdlong (float): initial
        loss estimates
    - blksize (int): packets per block
    - numblks (int): number of blocks held in memory on both ends
    - payload_size (int): payload bytes per packet
    - onfly_factor (float): packets older than onfly_factor * RTT no
        longer count as in flight
    - multipath (bool): use the multipath scheduler for every path
    - max_window (Optional[int]): cap on the unacknowledged packets per
        path. None disables the cap.
    - reset_estimates_on_timeout (bool): also reset the loss estimates
        when a path times out
    - seed (int): seed of the coefficient generator
    """

    alpha_rtt: float = Field(DEFAULT_ALPHA_RTT, gt=0, le=1)
    mu: float = Field(DEFAULT_MU, gt=0, le=1)
    nu: float = Field(DEFAULT_NU, gt=0, le=1)
    gamma: float = Field(DEFAULT_GAMMA, ge=1)
    alpha_vegas: float = DEFAULT_ALPHA_VEGAS
    beta_vegas: float = DEFAULT_BETA_VEGAS
    initial_tokens: float = Field(DEFAULT_INITIAL_TOKENS, gt=0)
    token_floor: float = Field(DEFAULT_TOKEN_FLOOR, gt=0)
    initial_ss_threshold: float = Field(DEFAULT_INITIAL_SS_THRESHOLD, gt=0)
    initial_rtt: float = Field(DEFAULT_INITIAL_RTT, gt=0)
    initial_p: float = Field(DEFAULT_INITIAL_P, ge=0, le=1)
    initial_p_long: float = Field(DEFAULT_INITIAL_P_LONG, ge=0, le=1)
    initial_p_stdlong: float = Field(DEFAULT_INITIAL_P_STDLONG, ge=0)
    blksize: int = Field(DEFAULT_BLKSIZE, ge=1, le=0xFFFF)
    numblks: int = Field(DEFAULT_NUMBLKS, ge=1, le=0xFFFF)
    payload_size: int = Field(DEFAULT_PAYLOAD_SIZE, ge=1, le=0xFFFF)
    onfly_factor: float = Field(DEFAULT_ONFLY_FACTOR, ge=1)
    multipath: bool = False
    max_window: Optional[int] = Field(None, ge=1)
    reset_estimates_on_timeout: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _check_consistency(self) -> "CtcpParameters":
        if self.nu >= self.mu:
            raise ValueError("the long-term weight nu must be below mu")
        if self.alpha_vegas >= self.beta_vegas:
            raise ValueError("alpha_vegas must be below beta_vegas")
        if self.initial_tokens < self.token_floor:
            raise ValueError("initial_tokens must not lie below token_floor")
        return self

    @classmethod
    def build(cls, **values: Any) -> "CtcpParameters":
        """Validate the values and translate pydantic's error into
        the package's exception hierarchy.

        Raises:
        ------
        - InvalidParametersException: if any value is out of range or
            the values contradict each other
        """
        try:
            return cls(**values)
        except ValidationError as exception:
            raise InvalidParametersException(str(exception)) from exception

    @staticmethod
    def _get_environs(env_path: Optional[str]) -> Dict[str, str]:
        """Merge the env file (if any) with the process environment.

        The process environment takes priority over the file.
        """
        environs: Dict[str, str] = {}
        if env_path is None:
            env_path = next((p for p in ENV_LOCATIONS if os.path.exists(p)), None)

        if env_path is not None:
            logger.debug("Loading parameters from %s", env_path)
            environs.update(
                {k: v for k, v in dotenv.dotenv_values(env_path).items() if v}
            )
        environs.update(os.environ)
        return environs

    @classmethod
    def make_from_env(
        cls, env_path: Optional[str] = None, **overrides: Any
    ) -> "CtcpParameters":
        """
        Create the parameters from keyword overrides, the environment and
        the defaults (in that priority).

        Args:
        ----
        - env_path (Optional[str]): path to an env file. By default we
            look for .ctcp or ctcp.env in the current directory.
        - overrides: explicit values. None values are ignored so that
            unset command line flags fall through to the environment.

        Returns:
        -------
        - CtcpParameters: validated parameter set
        """
        environs = cls._get_environs(env_path)
        values: Dict[str, Any] = {}
        for name in cls.model_fields:
            env_key = f"{ENV_PREFIX}{name.upper()}"
            if overrides.get(name) is not None:
                values[name] = overrides[name]
            elif environs.get(env_key):
                values[name] = environs[env_key]
        return cls.build(**values)

    @property
    def block_bytes(self) -> int:
        """Number of stream bytes carried by one full block"""
        return self.blksize * self.payload_size
