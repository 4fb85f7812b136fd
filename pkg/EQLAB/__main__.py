from EQLAB.cli import main

main()
