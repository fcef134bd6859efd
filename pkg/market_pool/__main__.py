"""Run the market pool command line."""
from .cli import main

raise SystemExit(main())
