from evostrat.cli import main

raise SystemExit(main())
