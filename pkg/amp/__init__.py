from .pool import GlobalMPPool, async_call, shutdown_global, MultiprocessingPool, JOIN_TIMEOUT
