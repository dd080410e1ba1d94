import logging

def setup_logging():
    logger = logging.getLogger("kacsim")
    logger.addHandler(logging.NullHandler())
    return logger
