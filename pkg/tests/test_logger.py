import logging

from scripts.logger import LOGGER_NAME, logger, run_log, setup_logger


def test_setup_logger_does_not_stack_handlers():
    before = len(logging.getLogger(LOGGER_NAME).handlers)
    setup_logger(level=logging.DEBUG)
    setup_logger(level=logging.INFO)

    assert len(logger.handlers) == before
    assert logger.level == logging.INFO


def test_run_log_captures_one_command(tmp_path):
    with run_log(tmp_path) as path:
        logger.info("inside the run")
    logger.info("after the run")

    text = path.read_text()
    assert path.name == "run.log"
    assert "inside the run" in text
    assert "after the run" not in text
    assert not any(isinstance(h, logging.FileHandler) for h in logger.handlers)
