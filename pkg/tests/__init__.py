"""
BYEL tests

Unit tests per subpackage plus CLI integration tests; set BYEL_RUN_SLOW=1 for the desk-profile run
"""
