public class WrongFieldType {
    private static Object instance;

    private WrongFieldType() {}

    public static WrongFieldType getInstance() {
        if (instance == null) instance = new WrongFieldType();
        return (WrongFieldType) instance;
    }
}
