from sonine.main import main

main()
