import os
import sys
import threading

from collections import deque
from typing import Any, Deque, Dict, List, Optional
from .default_values import *
from .repo_banner import get_banner
from .exceptions.vad_exceptions import MissingOutputDictKeys, InvalidOutputType


class OutputManager(object):
    """
    Singleton console display: one status block per runner class plus rolling progress logs.
    Every refresh erases the lines drawn last time and redraws all blocks. Drawn on stderr,
    stdout is left to reports.
    """
    _INSTANCE = None
    _STATUS_BLOCKS: Dict[str, Dict[str, str]] = dict()
    _LINE_BLOCKS: Dict[str, Deque[str]] = dict()
    _DRAWN = 0
    _OUTPUT_MUTEX = threading.RLock()
    _QUIET = False
    _STREAM = sys.stderr

    def __new__(cls, *args, **kwargs):  # singleton
        if not isinstance(cls._INSTANCE, cls):
            cls._INSTANCE = object.__new__(cls)
            cls._QUIET = cls._QUIET or bool(os.environ.get(OutputDefaultParams.QuietEnvVar))
            cls.print_banner()
        return cls._INSTANCE

    @classmethod
    def set_quiet(cls, quiet: bool):
        cls._QUIET = quiet

    @classmethod
    def is_quiet(cls) -> bool:
        return cls._QUIET

    def insert_output(self, source_name: str, output_type: str, status_keys: Optional[Dict[str, Any]] = None):
        with OutputManager._OUTPUT_MUTEX:
            if output_type == OutputType.Status:
                if source_name in OutputManager._STATUS_BLOCKS:
                    return
                if not status_keys:
                    raise MissingOutputDictKeys(source_name)
                OutputManager._STATUS_BLOCKS[source_name] = {key: self.construct_status_val(key, val)
                                                             for key, val in status_keys.items()}
            elif output_type == OutputType.Lines:
                if source_name in OutputManager._LINE_BLOCKS:
                    return
                OutputManager._LINE_BLOCKS[source_name] = deque([OutputDefaultParams.LinePrefix] *
                                                                OutputDefaultParams.MaxLen,
                                                                maxlen=OutputDefaultParams.MaxLen)
            else:
                raise InvalidOutputType(output_type)
            self._redraw()

    @staticmethod
    def construct_status_val(output_key, output_val) -> str:
        if isinstance(output_val, tuple):
            status_text, status_color = output_val
        else:
            status_text = output_val
            status_color = getattr(OutputStatuskeyColor, output_key, OutputColors.White)
        valstr = f"{status_text}".rjust(OutputDefaultParams.LineWidth - len(output_key), " ")
        return f"{output_key}{status_color}{valstr}{OutputColors.White}"

    @staticmethod
    def is_key_in_status(source_name: str, output_key: str) -> bool:
        with OutputManager._OUTPUT_MUTEX:
            return output_key in OutputManager._STATUS_BLOCKS.get(source_name, dict())

    def update_status(self, source_name: str, output_key: str, output_val: Any, refresh_output=True):
        with OutputManager._OUTPUT_MUTEX:
            block = OutputManager._STATUS_BLOCKS.setdefault(source_name, dict())
            block[output_key] = self.construct_status_val(output_key, output_val)
            if refresh_output:
                self._redraw()

    def update_lines(self, source_name: str, line: str):
        with OutputManager._OUTPUT_MUTEX:
            block = OutputManager._LINE_BLOCKS.setdefault(source_name, deque(maxlen=OutputDefaultParams.MaxLen))
            block.appendleft(f"{OutputDefaultParams.LinePrefix} {line}")
            self._redraw()

    @staticmethod
    def _render() -> List[str]:
        lines = list()
        for source, status in OutputManager._STATUS_BLOCKS.items():
            lines += [OutputDefaultParams.Delimiter, f"{OutputColors.BOLD}{source}{OutputColors.White}"]
            lines += list(status.values())
        for source, log in OutputManager._LINE_BLOCKS.items():
            lines += [OutputDefaultParams.Delimiter, f"{OutputColors.BOLD}{source}{OutputColors.White}"]
            lines += list(reversed(log))
        return lines

    def _redraw(self):
        if OutputManager._QUIET:
            return
        lines = self._render()
        OutputManager._STREAM.write(OutputManager._DRAWN * OutputDefaultParams.LineRemove)
        OutputManager._STREAM.write("".join(f"{line}\n" for line in lines))
        OutputManager._STREAM.flush()
        OutputManager._DRAWN = len(lines)

    @classmethod
    def print_banner(cls):
        if not cls._QUIET:
            cls._STREAM.write(get_banner())
