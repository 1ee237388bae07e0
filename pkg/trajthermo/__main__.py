from trajthermo.cli import main

main()
