def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if rep.when == "call" and "criterion" in props:
                lines.append((props["criterion"], outcome.upper()[:4], props.get("title", ""), rep.duration))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, title, secs in sorted(lines):
        terminalreporter.write_line(f"{status}  criterion {num:2d}  {title}  ({secs:.2f}s)")
