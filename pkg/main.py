from symfbm.cli import main

if __name__ == "__main__":
    # On Windows, the __main__ guard is mandatory for the worker pool.
    main()
