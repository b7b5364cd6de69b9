from homeplan.cli import entry

entry()
